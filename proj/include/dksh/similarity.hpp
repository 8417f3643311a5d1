#pragma once

#include "dksh/common.hpp"
#include "dksh/graph.hpp"

namespace dksh {

// Label-aware supervision matrix. Nonzeros exist only inside same-class
// blocks of the supervision pool, so it is stored sparse.
struct SimilarityMatrix {
    SpMatrix S;
    std::int64_t supervised_pairs = 0;  // nonzero count
};

// S_ij = exp(-||P_i - P_j||^2 / max_d2) for same-class pairs of the
// supervision pool, 0 otherwise. max_d2 is the maximum squared row distance
// over all N^2 row pairs of P (Gram trick). The pool is the labeled training
// set; include_test_labeled widens it to every labeled node (leaks test
// labels — reproduction mode only).
SimilarityMatrix compute_similarity(const Matrix& P, const LabelMap& labels, const Split& split,
                                    bool include_test_labeled = false);

void save_similarity_csv(const SimilarityMatrix& sm, const std::string& path);
SimilarityMatrix load_similarity_csv(const std::string& path, int num_nodes);

}  // namespace dksh
