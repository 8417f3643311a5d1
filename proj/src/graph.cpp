#include "dksh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace dksh {

void log_warn(const std::string& msg) {
    std::cerr << "[dksh] warning: " << msg << "\n";
}

bool Graph::is_symmetric() const {
    for (int i = 0; i < num_nodes; ++i) {
        for (int j : adjacency[i]) {
            if (j < 0 || j >= num_nodes) return false;
            const auto& back = adjacency[j];
            if (!std::binary_search(back.begin(), back.end(), i)) return false;
        }
    }
    return true;
}

std::vector<int> LabelMap::labeled_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(node_class.size()); ++i)
        if (node_class[i] >= 0) out.push_back(i);
    return out;
}

namespace {

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

}  // namespace

Graph load_graph(const std::string& edge_list_path) {
    std::ifstream in(edge_list_path);
    if (!in) fail("load_graph: cannot open '" + edge_list_path + "'");

    std::vector<std::string> tokens;                 // first-seen order
    std::unordered_map<std::string, int> token_ids;  // token -> provisional id
    std::vector<std::pair<int, int>> raw_edges;
    std::int64_t self_loops = 0;

    auto intern = [&](const std::string& t) {
        auto it = token_ids.find(t);
        if (it != token_ids.end()) return it->second;
        const int id = static_cast<int>(tokens.size());
        tokens.push_back(t);
        token_ids.emplace(t, id);
        return id;
    };

    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::istringstream ss(line);
        std::string a, b, extra;
        if (!(ss >> a >> b) || (ss >> extra)) {
            fail(strf("load_graph: malformed line %lld in '%s'", static_cast<long long>(line_no),
                      edge_list_path.c_str()));
        }
        const int u = intern(a), v = intern(b);
        if (u == v) {
            ++self_loops;
            continue;
        }
        raw_edges.emplace_back(u, v);
    }
    if (self_loops > 0)
        log_warn(strf("load_graph: dropped %lld self loop(s)", static_cast<long long>(self_loops)));

    // symmetrize + dedup on provisional ids
    const int n_raw = static_cast<int>(tokens.size());
    std::vector<std::set<int>> adj(n_raw);
    for (auto [u, v] : raw_edges) {
        adj[u].insert(v);
        adj[v].insert(u);
    }

    // drop zero-degree nodes (can only arise from self-loop-only nodes),
    // compact indices preserving first-seen order
    std::vector<int> remap(n_raw, -1);
    Graph g;
    for (int i = 0; i < n_raw; ++i) {
        if (adj[i].empty()) continue;
        remap[i] = g.num_nodes++;
        g.node_tokens.push_back(tokens[i]);
    }
    if (g.num_nodes == 0) fail("load_graph: empty graph in '" + edge_list_path + "'");

    g.adjacency.resize(g.num_nodes);
    for (int i = 0; i < n_raw; ++i) {
        if (remap[i] < 0) continue;
        auto& lst = g.adjacency[remap[i]];
        lst.reserve(adj[i].size());
        for (int j : adj[i]) lst.push_back(remap[j]);
        std::sort(lst.begin(), lst.end());
        g.num_edges += static_cast<std::int64_t>(lst.size());
    }
    g.num_edges /= 2;
    for (int i = 0; i < g.num_nodes; ++i) g.token_to_index.emplace(g.node_tokens[i], i);
    return g;
}

LabelMap load_labels(const std::string& label_path, const Graph& graph, bool strict) {
    std::ifstream in(label_path);
    if (!in) fail("load_labels: cannot open '" + label_path + "'");

    LabelMap lm;
    lm.node_class.assign(graph.num_nodes, -1);
    std::unordered_map<std::string, int> class_ids;

    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::istringstream ss(line);
        std::string node_tok, class_tok, extra;
        if (!(ss >> node_tok >> class_tok) || (ss >> extra)) {
            fail(strf("load_labels: malformed line %lld in '%s'", static_cast<long long>(line_no),
                      label_path.c_str()));
        }
        auto nit = graph.token_to_index.find(node_tok);
        if (nit == graph.token_to_index.end()) {
            if (strict)
                fail(strf("load_labels: line %lld references unknown node '%s'",
                          static_cast<long long>(line_no), node_tok.c_str()));
            ++lm.skipped_unknown;
            continue;
        }
        auto cit = class_ids.find(class_tok);
        int cid;
        if (cit == class_ids.end()) {
            cid = static_cast<int>(lm.class_tokens.size());
            lm.class_tokens.push_back(class_tok);
            class_ids.emplace(class_tok, cid);
        } else {
            cid = cit->second;
        }
        const int node = nit->second;
        if (lm.node_class[node] >= 0 && lm.node_class[node] != cid) {
            fail(strf("load_labels: node '%s' labeled twice with conflicting classes (line %lld)",
                      node_tok.c_str(), static_cast<long long>(line_no)));
        }
        lm.node_class[node] = cid;
    }
    lm.num_classes = static_cast<int>(lm.class_tokens.size());
    if (lm.labeled_nodes().empty()) fail("load_labels: no labels in '" + label_path + "'");
    if (lm.num_classes < 2) fail("load_labels: fewer than 2 distinct classes");
    if (lm.skipped_unknown > 0)
        log_warn(strf("load_labels: skipped %lld label(s) for nodes not in the graph",
                      static_cast<long long>(lm.skipped_unknown)));
    return lm;
}

Split make_split(const LabelMap& labels, double ratio, std::uint64_t seed, bool stratified) {
    if (!(ratio > 0.0 && ratio < 1.0)) fail("make_split: ratio must lie in (0,1)");
    const std::vector<int> labeled = labels.labeled_nodes();
    const auto total = static_cast<std::int64_t>(labeled.size());
    const auto want_train = static_cast<std::int64_t>(std::llround(ratio * static_cast<double>(total)));
    if (want_train <= 0 || want_train >= total)
        fail(strf("make_split: ratio %.4f yields empty train or test set (%lld labeled nodes)", ratio,
                  static_cast<long long>(total)));

    std::mt19937_64 rng(mix_seed(seed, fnv1a("split")));
    std::vector<int> order = labeled;
    fisher_yates(order, rng);

    Split sp;
    sp.ratio = ratio;
    sp.seed = seed;

    if (!stratified) {
        sp.train_nodes.assign(order.begin(), order.begin() + want_train);
    } else {
        // per-class selection, reconciled to the global train count
        std::vector<std::vector<int>> by_class(static_cast<std::size_t>(labels.num_classes));
        for (int v : order) by_class[static_cast<std::size_t>(labels.node_class[v])].push_back(v);
        std::vector<std::int64_t> take(by_class.size());
        std::int64_t assigned = 0;
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            take[c] = std::llround(ratio * static_cast<double>(by_class[c].size()));
            take[c] = std::min<std::int64_t>(take[c], static_cast<std::int64_t>(by_class[c].size()));
            assigned += take[c];
        }
        // adjust largest classes first, deterministically
        std::vector<std::size_t> cls_order(by_class.size());
        for (std::size_t c = 0; c < cls_order.size(); ++c) cls_order[c] = c;
        std::sort(cls_order.begin(), cls_order.end(), [&](std::size_t a, std::size_t b) {
            if (by_class[a].size() != by_class[b].size()) return by_class[a].size() > by_class[b].size();
            return a < b;
        });
        std::size_t k = 0;
        while (assigned != want_train && !cls_order.empty()) {
            const std::size_t c = cls_order[k % cls_order.size()];
            if (assigned < want_train && take[c] < static_cast<std::int64_t>(by_class[c].size())) {
                ++take[c];
                ++assigned;
            } else if (assigned > want_train && take[c] > 0) {
                --take[c];
                --assigned;
            }
            ++k;
        }
        for (std::size_t c = 0; c < by_class.size(); ++c)
            sp.train_nodes.insert(sp.train_nodes.end(), by_class[c].begin(),
                                  by_class[c].begin() + take[c]);
    }

    std::sort(sp.train_nodes.begin(), sp.train_nodes.end());
    std::set<int> train_set(sp.train_nodes.begin(), sp.train_nodes.end());
    for (int v : labeled)
        if (!train_set.count(v)) sp.test_nodes.push_back(v);
    return sp;
}

void save_graph(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_graph: cannot write '" + path + "'");
    for (int i = 0; i < g.num_nodes; ++i)
        for (int j : g.adjacency[i])
            if (i < j) out << g.node_tokens[i] << " " << g.node_tokens[j] << "\n";
}

void save_remap_csv(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_remap_csv: cannot write '" + path + "'");
    out << "node_token,index\n";
    for (int i = 0; i < g.num_nodes; ++i) out << g.node_tokens[i] << "," << i << "\n";
}

std::uint64_t graph_content_hash(const Graph& g) {
    std::uint64_t h = fnv1a("graph");
    h = fnv1a(&g.num_nodes, sizeof(g.num_nodes), h);
    for (int i = 0; i < g.num_nodes; ++i) {
        h = fnv1a(g.node_tokens[i], h);
        h = fnv1a(g.adjacency[i].data(), g.adjacency[i].size() * sizeof(int), h);
    }
    return h;
}

}  // namespace dksh
