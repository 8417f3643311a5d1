#pragma once

#include "dksh/common.hpp"

#include <string>
#include <vector>

namespace dksh {

// Binary C-SVC dual solution over a precomputed kernel matrix.
struct KernelSvmModel {
    Vector alpha;                      // >= 0, size n_train
    std::vector<signed char> y;        // ±1 per training point
    double bias = 0.0;                 // decision f = sum_i alpha_i y_i K(i,.) + bias
    std::vector<int> support_indices;  // { i : alpha_i > 0 }
    double C = 1.0;
    std::int64_t iterations = 0;
    double kkt_gap = 0.0;  // final maximal-violating-pair gap

    double dual_objective(const Matrix& K) const;  // e'a - 1/2 (ay)'K(ay)
    // decision values for columns of K_cross (n_train x m)
    Vector decision_values(const Matrix& k_cross) const;
};

// SMO with maximal-violating-pair selection; deterministic (ties resolved to
// the lowest index). K must be symmetric and PSD up to -1e-8 (project first).
KernelSvmModel train_kernel_svm(const Matrix& K, const std::vector<int>& y, double C,
                                double tol = 1e-4, std::int64_t max_iter = 2000000,
                                const Vector* warm_start = nullptr);

// One-vs-rest L2-regularized hinge-loss SVM, dual coordinate descent, bias by
// feature augmentation.
struct LinearSvmModel {
    Matrix weights;  // num_classes x (dim + 1); last column is the bias
    double C = 1.0;
    int num_classes = 0;
    int dim = 0;
};

LinearSvmModel train_linear_svm(const Matrix& X, const std::vector<int>& labels, int num_classes,
                                double C, double tol = 1e-4, int max_epochs = 1000);

// argmax of per-class scores; ties break to the lowest class id
std::vector<int> predict(const LinearSvmModel& model, const Matrix& X);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual);

void save_kernel_svm(const KernelSvmModel& m, const std::string& path);
KernelSvmModel load_kernel_svm(const std::string& path);
void save_linear_svm(const LinearSvmModel& m, const std::string& path);
LinearSvmModel load_linear_svm(const std::string& path);

}  // namespace dksh
