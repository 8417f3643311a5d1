#pragma once

#include "dksh/common.hpp"
#include "dksh/graph.hpp"

namespace dksh {

struct WalkConfig {
    int window_size = 50;    // p
    int walk_length = 200;   // l, node count per walk
    int walks_per_node = 10; // gamma
    std::uint64_t seed = 1;
    // Literal mode keeps the center position itself in its own window
    // (dis = 0, weight (p+1)/p on the diagonal). Off by default.
    bool include_self_pairs = false;

    void validate() const;
};

struct WalkSet {
    int num_nodes = 0;
    int walk_length = 0;
    std::vector<std::vector<int>> walks;  // gamma * num_nodes entries
};

// gamma passes over the shuffled node set, one truncated uniform random walk
// per start node. One RNG stream per (pass, start node), so generation is
// parallel and bit-reproducible for a fixed seed at any thread count.
WalkSet generate_walks(const Graph& graph, const WalkConfig& config);

// Distance-weighted co-occurrence accumulation: for each walk position i and
// every other position j with |i-j| <= p, P[w[i]][w[j]] += (p+1-|i-j|)/p,
// windows truncated at walk boundaries. OpenMP-parallel over walks with
// per-thread partials; integer window weights are summed (exact in any
// order) and divided by p once, so the result is bit-identical across
// thread counts and to the serial reference.
Matrix build_structure_matrix(const WalkSet& walks, const WalkConfig& config, int num_nodes);

void save_walks(const WalkSet& ws, const std::string& path);
WalkSet load_walks(const std::string& path);

// binary row-major doubles, 8-byte count header
void save_structure_matrix(const Matrix& P, const std::string& path);
Matrix load_structure_matrix(const std::string& path);
void export_structure_matrix_csv(const Matrix& P, const std::string& path);

}  // namespace dksh
