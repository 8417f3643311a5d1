#pragma once

#include "dksh/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dksh {

enum class KernelKind { linear, rbf, sigmoid, polynomial };

const char* kernel_kind_name(KernelKind k);
KernelKind kernel_kind_from_name(const std::string& name);

struct ElemKernel {
    KernelKind kind = KernelKind::linear;
    double gamma = 1.0;  // rbf: exp(-gamma ||x-y||^2)
    double alpha = 1.0;  // sigmoid: tanh(alpha x.y + beta); polynomial: (alpha x.y + beta)^degree
    double beta = 1.0;
    int degree = 2;

    static ElemKernel linear();
    static ElemKernel rbf(double gamma = 1.0);
    static ElemKernel sigmoid(double alpha = -1e-4, double beta = 1.0);
    static ElemKernel polynomial(double alpha = 1.0, double beta = 1.0, int degree = 2);
    void validate() const;
};

// Layered multiple-kernel architecture: layer 1 applies its T elementary
// kernels to the input feature rows; each deeper layer applies them to the
// rows of the nonnegative mu-weighted mix of the previous layer's kernels;
// the output is the mu-weighted mix of the last layer.
struct DeepKernelNet {
    int num_layers = 3;
    int kernels_per_layer = 4;
    std::vector<std::vector<ElemKernel>> layer_kernels;  // [L][T]
    Matrix mu;                                           // L x T, all >= 0

    // Hidden mixes are rescaled to Frobenius norm sqrt(N) before being used
    // as features; without this, magnitudes compound across layers (the
    // polynomial unit squares them) and deep stacks overflow on real data.
    bool rescale_hidden = true;
    // RBF units divide gamma by the median pairwise squared distance of the
    // incoming rows; the literal gamma saturates on unnormalized features.
    bool median_rbf = true;

    // linear / rbf / sigmoid / polynomial cycling across T units, uniform mu
    static DeepKernelNet standard(int num_layers = 3, int kernels_per_layer = 4);
    void validate() const;
};

struct RbfScaleInfo {
    bool active = false;
    double median = 0.0;
    double gamma_eff = 0.0;
    // pairs (i<j) whose distance realizes the median: one for an odd pair
    // count, two averaged for an even count
    std::vector<std::pair<int, int>> mid_pairs;
};

// Intermediates of one forward pass, kept for the mu gradient.
struct ForwardTape {
    std::vector<Matrix> features;                // F^(l): layer input rows
    std::vector<Matrix> gram;                    // D^(l) = F^(l) F^(l)T
    std::vector<std::vector<Matrix>> kernels;    // K_t^(l)
    std::vector<Matrix> mixes;                   // M^(l) before rescale
    std::vector<double> rescale;                 // c_l, hidden layers only
    std::vector<std::vector<RbfScaleInfo>> rbf;  // per (l, t)
};

Matrix kernel_from_gram(const Matrix& D, const ElemKernel& k, bool median_rbf,
                        RbfScaleInfo* info = nullptr);

Matrix elementary_kernel(const Matrix& X, const ElemKernel& k, bool median_rbf = false,
                         RbfScaleInfo* info = nullptr);

Matrix forward(const Matrix& P, const DeepKernelNet& net, ForwardTape* tape = nullptr);

// Rows of forward(P, net) at the landmark indices; exact extraction.
Matrix forward_slice(const Matrix& P, const DeepKernelNet& net, const std::vector<int>& landmarks);

void save_net(const DeepKernelNet& net, const std::string& path);
DeepKernelNet load_net(const std::string& path);

// canonical one-line description (cache keys, logs)
std::string net_descriptor(const DeepKernelNet& net);

}  // namespace dksh
