#pragma once

#include "dksh/common.hpp"
#include "dksh/similarity.hpp"

#include <vector>

namespace dksh {

struct HashModel {
    std::vector<int> landmarks;  // R node indices
    Matrix W;                    // R x M
    Vector b;                    // per-bit threshold: row mean of W'K over the training pool
    int code_bits = 0;           // M (possibly rank-reduced)
    double lambda = 1e-4;
};

struct HashSolveInfo {
    double objective = 0.0;           // tr(What' Chat What) of the returned basis
    Vector g_evals;                   // kept eigenvalues of the stabilized G
    Vector c_hat_evals;               // spectrum of Chat, ascending
    double constraint_residual = 0.0; // ||W'GW - I||_max against the stabilized G
    double max_eigen_residual = 0.0;  // max_k ||Chat w - theta w||_2
    int requested_bits = 0;
};

// R distinct uniformly random indices (shuffled), deterministic per seed.
std::vector<int> select_landmarks(int n, int R, std::uint64_t seed);

// Supervised spectral solve:
//   L = diag(S 1) - S
//   C = K_RN L K_RN' + lambda K_RR
//   G = (1/N) K_RN (I - 11'/N) K_RN'
//   G = T0 L0 T0', keep the M largest eigenpairs (T, L)
//   Chat = L^{-1/2} T' (C+C')/2 T L^{-1/2}
//   What = eigenvectors of Chat (ascending eigenvalues; the objective is a
//          minimization — pick_largest flips this reading)
//   W = T L^{-1/2} What,   b = (1/N) W' K_RN 1
HashModel solve_hashing(const Matrix& k_rn, const Matrix& k_rr, const SimilarityMatrix& sim,
                        int code_bits, double lambda, bool pick_largest = false,
                        HashSolveInfo* info = nullptr);

// B_i = sign(W'K_i - b) with sign(0) = +1; returns codes as rows (+1/-1).
Eigen::MatrixXi encode(const Matrix& k_cols, const HashModel& model);

void save_hash_model(const HashModel& m, const std::string& path);
HashModel load_hash_model(const std::string& path);

// one node per line: node index then M space-separated ±1 values
void save_codes(const Eigen::MatrixXi& codes, const std::string& path);
Eigen::MatrixXi load_codes(const std::string& path);

}  // namespace dksh
