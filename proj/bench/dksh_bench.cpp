// Benchmark of the OpenMP kernels against the serial reference
// implementations. Sizes are kept moderate so a full run stays under a
// minute; pass a scale factor to stress larger instances.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "dksh/deep_kernel.hpp"
#include "dksh/graph.hpp"
#include "dksh/pipeline.hpp"
#include "dksh/reference.hpp"
#include "dksh/similarity.hpp"
#include "dksh/walker.hpp"

#include <algorithm>

using namespace dksh;

namespace {

double now_ms() {
    using clk = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clk::now().time_since_epoch()).count();
}

Graph ring_graph(int n, int extra_edges, std::uint64_t seed) {
    Graph g;
    g.num_nodes = n;
    g.adjacency.resize(n);
    auto add = [&](int a, int b) {
        if (a == b) return;
        auto& la = g.adjacency[a];
        auto& lb = g.adjacency[b];
        if (std::find(la.begin(), la.end(), b) != la.end()) return;
        la.push_back(b);
        lb.push_back(a);
        ++g.num_edges;
    };
    for (int i = 0; i < n; ++i) add(i, (i + 1) % n);
    std::mt19937_64 rng(seed);
    for (int e = 0; e < extra_edges; ++e)
        add(static_cast<int>(bounded(rng, n)), static_cast<int>(bounded(rng, n)));
    for (auto& lst : g.adjacency) std::sort(lst.begin(), lst.end());
    for (int i = 0; i < n; ++i) g.node_tokens.push_back(std::to_string(i));
    return g;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-24s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
    const double scale = argc > 1 ? std::atof(argv[1]) : 1.0;
    const int n = static_cast<int>(600 * scale);
    std::printf("benchmark at n=%d, %d thread(s)\n", n, omp_get_max_threads());

    // the accumulation kernel is exercised at realistic walk volume
    // (full-size runs have ~100x more window events than matrix entries)
    {
        const int ns = std::min(n, 600);
        const Graph gs = ring_graph(ns, 3 * ns, 7);
        WalkConfig heavy;
        heavy.window_size = 25;
        heavy.walk_length = 120;
        heavy.walks_per_node = 20;
        heavy.seed = 11;
        const WalkSet hw = generate_walks(gs, heavy);
        const double t0 = now_ms();
        const Matrix p_ref = ref::structure_matrix_naive(hw, heavy, ns);
        const double t1 = now_ms();
        const Matrix p_omp = build_structure_matrix(hw, heavy, ns);
        const double t2 = now_ms();
        report("structure matrix", t1 - t0, t2 - t1);
        if (p_ref != p_omp) {
            std::printf("MISMATCH: structure matrix differs from the reference\n");
            return 1;
        }
    }

    const Graph g = ring_graph(n, 3 * n, 7);
    WalkConfig wcfg;
    wcfg.window_size = 10;
    wcfg.walk_length = 40;
    wcfg.walks_per_node = 4;
    wcfg.seed = 11;
    const WalkSet walks = generate_walks(g, wcfg);
    const Matrix p_omp = build_structure_matrix(walks, wcfg, n);

    // labels: four blocks around the ring
    LabelMap labels;
    labels.num_classes = 4;
    labels.node_class.resize(n);
    for (int i = 0; i < n; ++i) labels.node_class[i] = i * 4 / n;
    for (int c = 0; c < 4; ++c) labels.class_tokens.push_back(std::to_string(c));
    const Split split = make_split(labels, 0.5, 3);

    double t0 = now_ms();
    const Matrix s_ref = ref::similarity_naive(p_omp, labels, split);
    double t1 = now_ms();
    const SimilarityMatrix s_omp = compute_similarity(p_omp, labels, split);
    double t2 = now_ms();
    report("similarity matrix", t1 - t0, t2 - t1);
    const double s_err = (Matrix(s_omp.S) - s_ref).cwiseAbs().maxCoeff();
    if (s_err > 1e-12) {
        std::printf("MISMATCH: similarity differs from the reference by %.3e\n", s_err);
        return 1;
    }

    const Matrix features = l2_normalize_rows(p_omp);
    const DeepKernelNet net = DeepKernelNet::standard(2, 4);
    t0 = now_ms();
    const Matrix k_ref = ref::forward_naive(features, net);
    t1 = now_ms();
    const Matrix k_opt = forward(features, net);
    t2 = now_ms();
    report("deep kernel forward", t1 - t0, t2 - t1);
    const double k_err = (k_ref - k_opt).cwiseAbs().maxCoeff() /
                         std::max(1.0, k_ref.cwiseAbs().maxCoeff());
    if (k_err > 1e-9) {
        std::printf("MISMATCH: forward differs from the reference by %.3e (relative)\n", k_err);
        return 1;
    }
    return 0;
}
