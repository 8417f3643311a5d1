#pragma once

#include "dksh/common.hpp"
#include "dksh/deep_kernel.hpp"
#include "dksh/graph.hpp"
#include "dksh/walker.hpp"

namespace dksh::ref {

// Serial reference implementations. These are the plain double-loop
// renditions of the parallel kernels, kept for oracle tests and for the
// benchmark target. They must stay independent of the optimized paths.

// Flat double loop over all position pairs of every walk, no partitioning.
Matrix structure_matrix_naive(const WalkSet& walks, const WalkConfig& config, int num_nodes);

// Direct evaluation: per-pair squared distances via an explicit loop over
// coordinates, max distance over all pairs likewise.
Matrix similarity_naive(const Matrix& P, const LabelMap& labels, const Split& split,
                        bool include_test_labeled = false);

// Per-pair elementary kernel evaluation without the shared Gram product.
Matrix elementary_kernel_naive(const Matrix& X, const ElemKernel& k, bool median_rbf = false);

// Layer recursion evaluated with the naive kernels.
Matrix forward_naive(const Matrix& P, const DeepKernelNet& net);

}  // namespace dksh::ref
