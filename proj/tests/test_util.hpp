#pragma once

// Shared fixtures and independent oracles for the test suites. The oracles
// here deliberately avoid the library's optimized code paths.

#include "dksh/common.hpp"
#include "dksh/graph.hpp"
#include "dksh/svm.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace dksh::test {

inline std::string tmp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "dksh_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

inline std::string write_file(const std::string& name, const std::string& content) {
    const std::string p = tmp_path(name);
    std::ofstream out(p);
    out << content;
    return p;
}

inline Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    Graph g;
    g.num_nodes = n;
    g.adjacency.resize(static_cast<std::size_t>(n));
    for (auto [a, b] : edges) {
        g.adjacency[static_cast<std::size_t>(a)].push_back(b);
        g.adjacency[static_cast<std::size_t>(b)].push_back(a);
        ++g.num_edges;
    }
    for (auto& lst : g.adjacency) std::sort(lst.begin(), lst.end());
    for (int i = 0; i < n; ++i) {
        g.node_tokens.push_back(std::to_string(i));
        g.token_to_index.emplace(g.node_tokens.back(), i);
    }
    return g;
}

inline Graph path_graph(int n) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return graph_from_edges(n, edges);
}

// planted-partition graph with labels equal to the blocks; every node is
// wired to at least one same-block neighbor
inline std::pair<Graph, LabelMap> sbm_graph(int n, int k, double p_in, double p_out,
                                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LabelMap labels;
    labels.num_classes = k;
    labels.node_class.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels.node_class[static_cast<std::size_t>(i)] = i % k;
    for (int c = 0; c < k; ++c) labels.class_tokens.push_back(std::to_string(c));

    std::vector<std::pair<int, int>> edges;
    std::vector<char> connected(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool same = labels.node_class[static_cast<std::size_t>(i)] ==
                              labels.node_class[static_cast<std::size_t>(j)];
            if (u(rng) < (same ? p_in : p_out)) {
                edges.emplace_back(i, j);
                connected[static_cast<std::size_t>(i)] = connected[static_cast<std::size_t>(j)] = 1;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (connected[static_cast<std::size_t>(i)]) continue;
        const int j = (i + k) % n == i ? (i + 1) % n : (i + k) % n;  // same block when possible
        edges.emplace_back(std::min(i, j), std::max(i, j));
        connected[static_cast<std::size_t>(i)] = connected[static_cast<std::size_t>(j)] = 1;
    }
    return {graph_from_edges(n, edges), labels};
}

inline Matrix random_features(int n, int d, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    Matrix X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = nd(rng);
    return X;
}

// Exact reference for the C-SVC dual by KKT active-set enumeration: every
// index is assigned to {zero, box, free}; the stationarity system is solved
// for the free block and feasibility checked. Exact for convex duals.
// Returns the maximal dual objective e'a - 1/2 a'Qa.
inline double svm_dual_reference(const Matrix& K, const std::vector<int>& y, double C) {
    const int n = static_cast<int>(K.rows());
    if (n > 12) fail("svm_dual_reference: enumeration limited to n <= 12");
    Matrix Q(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Q(i, j) = y[static_cast<std::size_t>(i)] *
                                              y[static_cast<std::size_t>(j)] * K(i, j);

    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0=zero, 1=box, 2=free

    const auto objective = [&](const Vector& a) { return a.sum() - 0.5 * a.dot(Q * a); };

    std::int64_t combos = 1;
    for (int i = 0; i < n; ++i) combos *= 3;
    for (std::int64_t code = 0; code < combos; ++code) {
        std::int64_t c = code;
        std::vector<int> free_idx;
        Vector a = Vector::Zero(n);
        double ssum = 0.0;  // sum over fixed entries of alpha_i y_i
        for (int i = 0; i < n; ++i) {
            state[static_cast<std::size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
            if (state[static_cast<std::size_t>(i)] == 1) {
                a(i) = C;
                ssum += C * y[static_cast<std::size_t>(i)];
            } else if (state[static_cast<std::size_t>(i)] == 2) {
                free_idx.push_back(i);
            }
        }
        const int f = static_cast<int>(free_idx.size());
        double b = 0.0;
        if (f > 0) {
            // [Q_FF  y_F; y_F' 0] [a_F; b] = [1 - Q_FU C 1; -ssum]
            Matrix A = Matrix::Zero(f + 1, f + 1);
            Vector rhs(f + 1);
            for (int r = 0; r < f; ++r) {
                const int i = free_idx[static_cast<std::size_t>(r)];
                for (int s = 0; s < f; ++s) A(r, s) = Q(i, free_idx[static_cast<std::size_t>(s)]);
                A(r, f) = y[static_cast<std::size_t>(i)];
                A(f, r) = y[static_cast<std::size_t>(i)];
                double fixed = 0.0;
                for (int j = 0; j < n; ++j)
                    if (state[static_cast<std::size_t>(j)] == 1) fixed += Q(i, j) * C;
                rhs(r) = 1.0 - fixed;
            }
            rhs(f) = -ssum;
            Eigen::FullPivLU<Matrix> lu(A);
            if (!lu.isInvertible()) continue;
            const Vector sol = lu.solve(rhs);
            bool ok = true;
            for (int r = 0; r < f; ++r) {
                if (!(sol(r) >= -1e-9 && sol(r) <= C + 1e-9)) ok = false;
                a(free_idx[static_cast<std::size_t>(r)]) = std::min(std::max(sol(r), 0.0), C);
            }
            if (!ok) continue;
            b = sol(f);
        } else {
            if (std::abs(ssum) > 1e-9) continue;
            // b free: any value satisfying the inequality KKT conditions below
            double lo = -std::numeric_limits<double>::infinity();
            double hi = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                const double gi = (Q * a)(i) - 1.0;
                const double yi = y[static_cast<std::size_t>(i)];
                // zero: gi + b yi >= 0 ; box: gi + b yi <= 0
                if (state[static_cast<std::size_t>(i)] == 0) {
                    if (yi > 0) lo = std::max(lo, -gi);
                    else hi = std::min(hi, gi);
                } else {
                    if (yi > 0) hi = std::min(hi, -gi);
                    else lo = std::max(lo, gi);
                }
            }
            if (lo > hi + 1e-9) continue;
            b = 0.5 * (std::max(lo, -1e6) + std::min(hi, 1e6));
        }
        // verify inequality KKT for zero/box entries
        const Vector g = Q * a;
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            const double gi = g(i) - 1.0 + b * y[static_cast<std::size_t>(i)];
            if (state[static_cast<std::size_t>(i)] == 0 && gi < -1e-7) ok = false;
            if (state[static_cast<std::size_t>(i)] == 1 && gi > 1e-7) ok = false;
        }
        if (!ok) continue;
        best = std::max(best, objective(a));
    }
    if (!std::isfinite(best)) fail("svm_dual_reference: no feasible KKT point found");
    return best;
}

}  // namespace dksh::test
