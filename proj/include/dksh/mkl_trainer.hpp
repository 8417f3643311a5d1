#pragma once

#include "dksh/common.hpp"
#include "dksh/deep_kernel.hpp"
#include "dksh/graph.hpp"
#include "dksh/linalg.hpp"
#include "dksh/svm.hpp"

#include <vector>

namespace dksh {

// Smoothed step link: phi(x) = 1/(1 + exp(-x/sigma)). The hard step has a
// useless gradient, so the span objective uses this everywhere.
double phi_step(double x, double sigma);
double phi_step_deriv(double x, double sigma);

// Per-binary-subproblem span state. span_sq[k] is the squared distance from
// support vector k to the affine hull of the other support vectors, computed
// as 1/(H_kk) with H the inverse of the support kernel matrix bordered by a
// constant row/column.
struct SpanBoundState {
    std::vector<int> sv;     // support positions within the training set
    Vector span_sq;          // D_i^2, one per support vector
    double objective = 0.0;  // sum_i phi(alpha_i D_i^2 - 1)
    bool degenerate = false; // single support vector: D^2 = K_ii
    Matrix k_inv;            // bordered inverse H, (s+1)x(s+1)
    double ridge = 0.0;      // diagonal ridge applied on a singular retry
};

SpanBoundState compute_span_bound(const Matrix& k_train, const KernelSvmModel& svm, double sigma);

struct TrainerConfig {
    int max_outer_iters = 50;
    double step_size = 0.01;
    double sigma = 0.1;
    double convergence_tol = 1e-3;  // on the relative change of T_span
    bool finite_diff_check = false; // spot-check the gradient each iteration
    double svm_c = 1.0;
    double svm_tol = 1e-4;
    int max_halvings = 20;

    void validate() const;
};

// Everything one outer iteration produces; the gradient consumes it.
struct TrainState {
    ForwardTape tape;
    Matrix k_train;  // PSD-projected train block
    SymEig psd_eig;  // eigendecomposition of the raw train block
    std::vector<KernelSvmModel> svms;   // per class with >= 1 train node
    std::vector<SpanBoundState> spans;  // matching svms
    std::vector<int> classes;           // class ids matching svms
    double objective = 0.0;
    int total_svs = 0;
};

TrainState eval_train_state(const Matrix& P, const DeepKernelNet& net, const LabelMap& labels,
                            const Split& split, const TrainerConfig& cfg,
                            const std::vector<Vector>* warm_alphas = nullptr);

// Backprop of a scalar functional through the layer recursion: abar is the
// adjoint of the forward output (dScalar/dK), the result is dScalar/dmu.
Matrix backprop_output_adjoint(const DeepKernelNet& net, const ForwardTape& tape, const Matrix& abar);

// dT_span/dmu with every alpha held fixed: span adjoint -> PSD projection
// adjoint -> backprop through the layer recursion.
Matrix grad_mu(const DeepKernelNet& net, const TrainState& st, const Split& split, double sigma);

// T_span at a trial net with the support sets and alphas of `base` reused.
double objective_fixed_alpha(const Matrix& P, const DeepKernelNet& net, const TrainState& base,
                             const Split& split, double sigma);

struct TrainLogRow {
    int iteration = 0;
    double t_span = 0.0;
    double step_size = 0.0;
    int num_support_vectors = 0;
};

// Alternating optimization: (a) fix mu, train per-class SVMs on the deep
// kernel; (b) fix alpha, projected gradient step on mu with backtracking.
// Returns the net with the best objective seen.
DeepKernelNet train(const Matrix& P, DeepKernelNet net, const LabelMap& labels, const Split& split,
                    const TrainerConfig& cfg, std::vector<TrainLogRow>* log = nullptr);

void save_train_log_csv(const std::vector<TrainLogRow>& log, const std::string& path);

}  // namespace dksh
