#include "dksh/similarity.hpp"

#include "dksh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace dksh {

SimilarityMatrix compute_similarity(const Matrix& P, const LabelMap& labels, const Split& split,
                                    bool include_test_labeled) {
    const int n = static_cast<int>(P.rows());
    if (static_cast<int>(labels.node_class.size()) != n)
        fail("compute_similarity: label map does not match matrix size");

    const Matrix G = gram(P);

    double maxd2 = 0.0;
#pragma omp parallel for schedule(static) reduction(max : maxd2)
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d2 = G(i, i) + G(j, j) - 2.0 * G(i, j);
            if (d2 > maxd2) maxd2 = d2;
        }
    }
    if (!(maxd2 > 0.0)) fail("compute_similarity: degenerate structure matrix (all rows identical)");

    // supervision pool grouped by class
    std::vector<char> in_pool(static_cast<std::size_t>(n), 0);
    for (int v : split.train_nodes) in_pool[static_cast<std::size_t>(v)] = 1;
    if (include_test_labeled)
        for (int v : split.test_nodes) in_pool[static_cast<std::size_t>(v)] = 1;

    std::vector<std::vector<int>> members(static_cast<std::size_t>(labels.num_classes));
    for (int v = 0; v < n; ++v)
        if (in_pool[static_cast<std::size_t>(v)] && labels.node_class[v] >= 0)
            members[static_cast<std::size_t>(labels.node_class[v])].push_back(v);

    // per-row triplet slots keep assembly order deterministic under OpenMP
    std::vector<std::vector<Eigen::Triplet<double>>> slots(static_cast<std::size_t>(n));
    for (const auto& cls : members) {
        const int m = static_cast<int>(cls.size());
#pragma omp parallel for schedule(dynamic, 16)
        for (int a = 0; a < m; ++a) {
            const int i = cls[static_cast<std::size_t>(a)];
            auto& slot = slots[static_cast<std::size_t>(i)];
            for (int b = 0; b < m; ++b) {
                const int j = cls[static_cast<std::size_t>(b)];
                const double d2 = std::max(0.0, G(i, i) + G(j, j) - 2.0 * G(i, j));
                slot.emplace_back(i, j, std::exp(-d2 / maxd2));
            }
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    for (auto& slot : slots)
        triplets.insert(triplets.end(), slot.begin(), slot.end());

    SimilarityMatrix sm;
    sm.S.resize(n, n);
    sm.S.setFromTriplets(triplets.begin(), triplets.end());
    sm.S.makeCompressed();
    sm.supervised_pairs = sm.S.nonZeros();
    return sm;
}

void save_similarity_csv(const SimilarityMatrix& sm, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_similarity_csv: cannot write '" + path + "'");
    out << "i,j,value\n";
    char buf[64];
    for (int k = 0; k < sm.S.outerSize(); ++k) {
        for (SpMatrix::InnerIterator it(sm.S, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%.17g", it.value());
            out << it.row() << ',' << it.col() << ',' << buf << '\n';
        }
    }
}

SimilarityMatrix load_similarity_csv(const std::string& path, int num_nodes) {
    std::ifstream in(path);
    if (!in) fail("load_similarity_csv: cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);  // header
    std::vector<Eigen::Triplet<double>> triplets;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string si, sj, sv;
        if (!std::getline(ss, si, ',') || !std::getline(ss, sj, ',') || !std::getline(ss, sv))
            fail("load_similarity_csv: malformed line in '" + path + "'");
        triplets.emplace_back(std::stoi(si), std::stoi(sj), std::stod(sv));
    }
    SimilarityMatrix sm;
    sm.S.resize(num_nodes, num_nodes);
    sm.S.setFromTriplets(triplets.begin(), triplets.end());
    sm.S.makeCompressed();
    sm.supervised_pairs = sm.S.nonZeros();
    return sm;
}

}  // namespace dksh
