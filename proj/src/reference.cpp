#include "dksh/reference.hpp"

#include <algorithm>
#include <cmath>

namespace dksh::ref {

Matrix structure_matrix_naive(const WalkSet& ws, const WalkConfig& config, int num_nodes) {
    config.validate();
    const int p = config.window_size;
    // same arithmetic contract as the parallel kernel: exact integer window
    // weights, one division at the end
    Matrix P = Matrix::Zero(num_nodes, num_nodes);
    for (const auto& walk : ws.walks) {
        const int len = static_cast<int>(walk.size());
        for (int i = 0; i < len; ++i) {
            for (int j = std::max(0, i - p); j <= std::min(len - 1, i + p); ++j) {
                if (j == i && !config.include_self_pairs) continue;
                P(walk[i], walk[j]) += static_cast<double>(p + 1 - std::abs(i - j));
            }
        }
    }
    P /= static_cast<double>(p);
    return P;
}

namespace {

double row_dist2(const Matrix& P, int i, int j) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < P.cols(); ++k) {
        const double d = P(i, k) - P(j, k);
        s += d * d;
    }
    return s;
}

}  // namespace

Matrix similarity_naive(const Matrix& P, const LabelMap& labels, const Split& split,
                        bool include_test_labeled) {
    const int n = static_cast<int>(P.rows());
    double maxd2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) maxd2 = std::max(maxd2, row_dist2(P, i, j));
    if (!(maxd2 > 0.0)) fail("similarity_naive: degenerate structure matrix");

    std::vector<char> in_pool(static_cast<std::size_t>(n), 0);
    for (int v : split.train_nodes) in_pool[static_cast<std::size_t>(v)] = 1;
    if (include_test_labeled)
        for (int v : split.test_nodes) in_pool[static_cast<std::size_t>(v)] = 1;

    Matrix S = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (!in_pool[static_cast<std::size_t>(i)] || labels.node_class[i] < 0) continue;
        for (int j = 0; j < n; ++j) {
            if (!in_pool[static_cast<std::size_t>(j)]) continue;
            if (labels.node_class[j] != labels.node_class[i]) continue;
            S(i, j) = std::exp(-row_dist2(P, i, j) / maxd2);
        }
    }
    return S;
}

Matrix elementary_kernel_naive(const Matrix& X, const ElemKernel& k, bool median_rbf) {
    const auto n = X.rows();
    auto dot = [&](Eigen::Index i, Eigen::Index j) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < X.cols(); ++c) s += X(i, c) * X(j, c);
        return s;
    };
    auto dist2 = [&](Eigen::Index i, Eigen::Index j) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            const double d = X(i, c) - X(j, c);
            s += d * d;
        }
        return s;
    };

    Matrix K(n, n);
    switch (k.kind) {
        case KernelKind::linear:
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) K(i, j) = dot(i, j);
            break;
        case KernelKind::sigmoid:
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) K(i, j) = std::tanh(k.alpha * dot(i, j) + k.beta);
            break;
        case KernelKind::polynomial:
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    K(i, j) = std::pow(k.alpha * dot(i, j) + k.beta, k.degree);
            break;
        case KernelKind::rbf: {
            double geff = k.gamma;
            if (median_rbf && n > 1) {
                std::vector<double> vals;
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = i + 1; j < n; ++j) vals.push_back(dist2(i, j));
                std::sort(vals.begin(), vals.end());
                const std::size_t m = vals.size();
                const double med = (m % 2 == 1) ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
                if (med > 0.0) geff = k.gamma / med;
            }
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) K(i, j) = std::exp(-geff * dist2(i, j));
            break;
        }
    }
    return K;
}

Matrix forward_naive(const Matrix& P, const DeepKernelNet& net) {
    net.validate();
    const auto n = P.rows();
    Matrix F = P;
    Matrix M;
    for (int l = 0; l < net.num_layers; ++l) {
        M = Matrix::Zero(n, n);
        for (int t = 0; t < net.kernels_per_layer; ++t) {
            const auto& cfg = net.layer_kernels[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
            M += net.mu(l, t) * elementary_kernel_naive(F, cfg, net.median_rbf);
        }
        if (l + 1 < net.num_layers) {
            double c = 1.0;
            if (net.rescale_hidden) {
                double fro2 = 0.0;
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < n; ++j) fro2 += M(i, j) * M(i, j);
                if (!(fro2 > 0.0)) fail("forward_naive: zero hidden mix");
                c = std::sqrt(static_cast<double>(n)) / std::sqrt(fro2);
            }
            F = c * M;
        }
    }
    return M;
}

}  // namespace dksh::ref
