#pragma once

#include "dksh/common.hpp"

#include <string>
#include <unordered_map>
#include <vector>

namespace dksh {

// Undirected structural network. Node ids are dense 0-based indices; the
// original file tokens are kept for label joining and persistence.
// Invariants: symmetric adjacency, sorted neighbor lists, no self loops,
// no duplicate edges, every node has degree >= 1.
struct Graph {
    int num_nodes = 0;
    std::vector<std::vector<int>> adjacency;
    std::int64_t num_edges = 0;  // undirected edge count
    std::vector<std::string> node_tokens;
    std::unordered_map<std::string, int> token_to_index;

    int degree(int v) const { return static_cast<int>(adjacency[v].size()); }
    bool is_symmetric() const;
};

struct LabelMap {
    std::vector<int> node_class;  // per node, -1 = unlabeled
    int num_classes = 0;
    std::vector<std::string> class_tokens;  // class id -> token
    std::int64_t skipped_unknown = 0;       // label lines for removed/unknown nodes

    std::vector<int> labeled_nodes() const;  // ascending node index
};

struct Split {
    std::vector<int> train_nodes;  // ascending
    std::vector<int> test_nodes;   // ascending
    double ratio = 0.0;
    std::uint64_t seed = 0;
};

// Loads an edge list (one `u v` pair per line, `#` comments skipped),
// symmetrizes, drops self loops and duplicate edges, removes zero-degree
// nodes and compacts indices.
Graph load_graph(const std::string& edge_list_path);

// Labels in `node class` per-line format. Node tokens resolve through the
// graph's remap table; tokens for nodes that were removed during graph
// preprocessing are skipped (counted in skipped_unknown) unless strict.
LabelMap load_labels(const std::string& label_path, const Graph& graph, bool strict = false);

// Uniform random split of the labeled nodes; |train| = round(ratio * L).
// Stratified mode samples per class and reconciles rounding to that total.
Split make_split(const LabelMap& labels, double ratio, std::uint64_t seed, bool stratified = false);

void save_graph(const Graph& g, const std::string& path);
void save_remap_csv(const Graph& g, const std::string& path);

std::uint64_t graph_content_hash(const Graph& g);

}  // namespace dksh
