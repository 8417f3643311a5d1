#include "dksh/walker.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace dksh {

void WalkConfig::validate() const {
    if (window_size < 1) fail("WalkConfig: window_size must be >= 1");
    if (walk_length < 2) fail("WalkConfig: walk_length must be >= 2");
    if (walks_per_node < 1) fail("WalkConfig: walks_per_node must be >= 1");
    if (window_size >= walk_length) fail("WalkConfig: window_size must be < walk_length");
}

WalkSet generate_walks(const Graph& graph, const WalkConfig& config) {
    config.validate();
    const int n = graph.num_nodes;
    if (n == 0) fail("generate_walks: empty graph");
    for (int v = 0; v < n; ++v)
        if (graph.degree(v) == 0) fail(strf("generate_walks: node %d has degree 0", v));

    WalkSet ws;
    ws.num_nodes = n;
    ws.walk_length = config.walk_length;
    ws.walks.resize(static_cast<std::size_t>(config.walks_per_node) * n);

    for (int pass = 0; pass < config.walks_per_node; ++pass) {
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::mt19937_64 shuffle_rng(mix_seed(config.seed, fnv1a("shuffle"), pass));
        fisher_yates(order, shuffle_rng);

#pragma omp parallel for schedule(static)
        for (int k = 0; k < n; ++k) {
            const int start = order[k];
            std::mt19937_64 rng(mix_seed(config.seed, static_cast<std::uint64_t>(pass) + 1,
                                         static_cast<std::uint64_t>(start)));
            auto& walk = ws.walks[static_cast<std::size_t>(pass) * n + k];
            walk.resize(config.walk_length);
            int cur = start;
            walk[0] = cur;
            for (int s = 1; s < config.walk_length; ++s) {
                const auto& nbr = graph.adjacency[cur];
                cur = nbr[bounded(rng, nbr.size())];
                walk[s] = cur;
            }
        }
    }
    return ws;
}

Matrix build_structure_matrix(const WalkSet& ws, const WalkConfig& config, int num_nodes) {
    config.validate();
    const int p = config.window_size;
    for (const auto& walk : ws.walks)
        for (int v : walk)
            if (v < 0 || v >= num_nodes)
                fail(strf("build_structure_matrix: walk index %d out of range [0,%d)", v, num_nodes));

    // Integer window weights p+1-dis are accumulated and divided by p once at
    // the end: integer sums are exact in doubles at any merge order, so the
    // result is bit-identical across thread counts and to the serial
    // reference. Walks are partitioned across threads with per-thread
    // partial matrices (bounded by a memory budget).
    Matrix P = Matrix::Zero(num_nodes, num_nodes);
    const std::int64_t bytes = 8LL * num_nodes * num_nodes;
    const int mem_cap = static_cast<int>(std::max<std::int64_t>(1, (512LL << 20) / std::max<std::int64_t>(bytes, 1)));
    const int nthreads = std::max(1, std::min(omp_get_max_threads(), mem_cap));
    const auto nwalks = static_cast<std::int64_t>(ws.walks.size());

#pragma omp parallel num_threads(nthreads)
    {
        Matrix part = Matrix::Zero(num_nodes, num_nodes);
#pragma omp for schedule(static) nowait
        for (std::int64_t w = 0; w < nwalks; ++w) {
            const auto& walk = ws.walks[static_cast<std::size_t>(w)];
            const int len = static_cast<int>(walk.size());
            for (int i = 0; i < len; ++i) {
                const int a = walk[i];
                const int jlo = std::max(0, i - p);
                const int jhi = std::min(len - 1, i + p);
                for (int j = jlo; j <= jhi; ++j) {
                    if (j == i && !config.include_self_pairs) continue;
                    part(a, walk[j]) += static_cast<double>(p + 1 - std::abs(i - j));
                }
            }
        }
#pragma omp critical
        P += part;
    }
    P /= static_cast<double>(p);
    return P;
}

void save_walks(const WalkSet& ws, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_walks: cannot write '" + path + "'");
    for (const auto& walk : ws.walks) {
        for (std::size_t i = 0; i < walk.size(); ++i) {
            if (i) out << ' ';
            out << walk[i];
        }
        out << '\n';
    }
}

WalkSet load_walks(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_walks: cannot open '" + path + "'");
    WalkSet ws;
    std::string line;
    int max_node = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<int> walk;
        int v;
        while (ss >> v) {
            walk.push_back(v);
            max_node = std::max(max_node, v);
        }
        if (!walk.empty()) ws.walks.push_back(std::move(walk));
    }
    if (ws.walks.empty()) fail("load_walks: no walks in '" + path + "'");
    ws.walk_length = static_cast<int>(ws.walks.front().size());
    ws.num_nodes = max_node + 1;
    return ws;
}

void save_structure_matrix(const Matrix& P, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) fail("save_structure_matrix: cannot write '" + path + "'");
    const std::int64_t n = P.rows();
    std::fwrite(&n, sizeof(n), 1, f);
    std::vector<double> row(static_cast<std::size_t>(P.cols()));
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < P.cols(); ++j) row[static_cast<std::size_t>(j)] = P(i, j);
        std::fwrite(row.data(), sizeof(double), row.size(), f);
    }
    std::fclose(f);
}

Matrix load_structure_matrix(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) fail("load_structure_matrix: cannot open '" + path + "'");
    std::int64_t n = 0;
    if (std::fread(&n, sizeof(n), 1, f) != 1 || n <= 0) {
        std::fclose(f);
        fail("load_structure_matrix: bad header in '" + path + "'");
    }
    Matrix P(n, n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        if (std::fread(row.data(), sizeof(double), row.size(), f) != row.size()) {
            std::fclose(f);
            fail("load_structure_matrix: truncated file '" + path + "'");
        }
        for (std::int64_t j = 0; j < n; ++j) P(i, j) = row[static_cast<std::size_t>(j)];
    }
    std::fclose(f);
    return P;
}

void export_structure_matrix_csv(const Matrix& P, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("export_structure_matrix_csv: cannot write '" + path + "'");
    char buf[64];
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        for (Eigen::Index j = 0; j < P.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", P(i, j));
            if (j) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace dksh
