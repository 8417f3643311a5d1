#include "dksh/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace dksh {

double KernelSvmModel::dual_objective(const Matrix& K) const {
    Vector ay(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
        ay(i) = alpha(i) * static_cast<double>(y[static_cast<std::size_t>(i)]);
    return alpha.sum() - 0.5 * ay.dot(K * ay);
}

Vector KernelSvmModel::decision_values(const Matrix& k_cross) const {
    if (k_cross.rows() != alpha.size()) fail("decision_values: kernel row count mismatch");
    Vector ay(alpha.size());
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
        ay(i) = alpha(i) * static_cast<double>(y[static_cast<std::size_t>(i)]);
    Vector f = k_cross.transpose() * ay;
    f.array() += bias;
    return f;
}

KernelSvmModel train_kernel_svm(const Matrix& K, const std::vector<int>& y, double C, double tol,
                                std::int64_t max_iter, const Vector* warm_start) {
    const auto n = K.rows();
    if (K.cols() != n) fail("train_kernel_svm: kernel not square");
    if (static_cast<Eigen::Index>(y.size()) != n) fail("train_kernel_svm: label size mismatch");
    if (!(C > 0.0)) fail("train_kernel_svm: C must be > 0");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else fail("train_kernel_svm: labels must be +1/-1");
    }
    if (!has_pos || !has_neg)
        fail("train_kernel_svm: all labels identical, no two-class dual exists");

    KernelSvmModel m;
    m.C = C;
    m.y.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) m.y[i] = static_cast<signed char>(y[i]);

    Vector alpha = Vector::Zero(n);
    if (warm_start && warm_start->size() == n) {
        alpha = warm_start->cwiseMax(0.0).cwiseMin(C);
        // repair the equality constraint drift from the previous solve
        double imbalance = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) imbalance += alpha(i) * y[static_cast<std::size_t>(i)];
        for (Eigen::Index i = 0; i < n && std::abs(imbalance) > 0.0; ++i) {
            const double yi = y[static_cast<std::size_t>(i)];
            const double cand = alpha(i) - yi * imbalance;
            if (cand >= 0.0 && cand <= C) {
                alpha(i) = cand;
                imbalance = 0.0;
            }
        }
        if (std::abs(alpha.dot(Eigen::Map<const Eigen::VectorXi>(y.data(), n).cast<double>())) > 1e-9)
            alpha.setZero();
    }

    // gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij
    Vector grad = Vector::Constant(n, -1.0);
    if ((alpha.array() != 0.0).any()) {
        Vector ay(n);
        for (Eigen::Index i = 0; i < n; ++i) ay(i) = alpha(i) * y[static_cast<std::size_t>(i)];
        Vector Kay = K * ay;
        for (Eigen::Index i = 0; i < n; ++i) grad(i) = y[static_cast<std::size_t>(i)] * Kay(i) - 1.0;
    }

    const double tau = 1e-12;
    std::int64_t iter = 0;
    double gap = std::numeric_limits<double>::infinity();

    while (iter < max_iter) {
        // maximal violating pair
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index i_up = -1, i_low = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double yt = y[static_cast<std::size_t>(t)];
            const double v = -yt * grad(t);
            const bool in_up = (yt > 0 && alpha(t) < C) || (yt < 0 && alpha(t) > 0);
            const bool in_low = (yt > 0 && alpha(t) > 0) || (yt < 0 && alpha(t) < C);
            if (in_up && v > gmax) {
                gmax = v;
                i_up = t;
            }
            if (in_low && v < gmin) {
                gmin = v;
                i_low = t;
            }
        }
        gap = gmax - gmin;
        if (gap < tol) break;
        ++iter;

        const Eigen::Index i = i_up, j = i_low;
        const double yi = y[static_cast<std::size_t>(i)], yj = y[static_cast<std::size_t>(j)];
        const double old_ai = alpha(i), old_aj = alpha(j);

        if (yi != yj) {
            // curvature along (e_i + e_j): Q_ii + Q_jj + 2 Q_ij with Q_ij = -K_ij
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0) {
                if (alpha(j) < 0) {
                    alpha(j) = 0;
                    alpha(i) = diff;
                }
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = C - diff;
                }
            } else {
                if (alpha(i) < 0) {
                    alpha(i) = 0;
                    alpha(j) = -diff;
                }
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = C + diff;
                }
            }
        } else {
            double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
            if (quad <= 0.0) quad = tau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > C) {
                if (alpha(i) > C) {
                    alpha(i) = C;
                    alpha(j) = sum - C;
                }
                if (alpha(j) > C) {
                    alpha(j) = C;
                    alpha(i) = sum - C;
                }
            } else {
                if (alpha(i) < 0) {
                    alpha(i) = 0;
                    alpha(j) = sum;
                }
                if (alpha(j) < 0) {
                    alpha(j) = 0;
                    alpha(i) = sum;
                }
            }
        }

        const double dai = alpha(i) - old_ai, daj = alpha(j) - old_aj;
        for (Eigen::Index t = 0; t < n; ++t) {
            const double yt = y[static_cast<std::size_t>(t)];
            grad(t) += yt * (yi * K(t, i) * dai + yj * K(t, j) * daj);
        }
    }
    if (gap >= tol)
        fail(strf("train_kernel_svm: no convergence after %lld iterations (KKT gap %.3e)",
                  static_cast<long long>(iter), gap));

    // bias from the KKT conditions (rho convention: f = sum a_i y_i K - rho)
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yt = y[static_cast<std::size_t>(t)];
        const double yg = yt * grad(t);
        if (alpha(t) >= C) {
            if (yt < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha(t) <= 0.0) {
            if (yt > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = (n_free > 0) ? sum_free / n_free : 0.5 * (ub + lb);
    m.bias = -rho;
    m.alpha = std::move(alpha);
    m.iterations = iter;
    m.kkt_gap = gap;
    for (Eigen::Index t = 0; t < n; ++t)
        if (m.alpha(t) > 0.0) m.support_indices.push_back(static_cast<int>(t));
    if (m.support_indices.empty()) fail("train_kernel_svm: empty support set");
    return m;
}

LinearSvmModel train_linear_svm(const Matrix& X, const std::vector<int>& labels, int num_classes,
                                double C, double tol, int max_epochs) {
    const auto n = X.rows();
    const auto d = X.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n) fail("train_linear_svm: label size mismatch");
    if (!(C > 0.0)) fail("train_linear_svm: C must be > 0");
    if (num_classes < 2) fail("train_linear_svm: need at least 2 classes");
    {
        std::vector<char> seen(static_cast<std::size_t>(num_classes), 0);
        int distinct = 0;
        for (int c : labels) {
            if (c < 0 || c >= num_classes) fail("train_linear_svm: label out of range");
            if (!seen[static_cast<std::size_t>(c)]) {
                seen[static_cast<std::size_t>(c)] = 1;
                ++distinct;
            }
        }
        if (distinct < 2) fail("train_linear_svm: degenerate single-class input");
    }

    LinearSvmModel model;
    model.C = C;
    model.num_classes = num_classes;
    model.dim = static_cast<int>(d);
    model.weights = Matrix::Zero(num_classes, d + 1);

    Vector qii(n);
    for (Eigen::Index i = 0; i < n; ++i) qii(i) = X.row(i).squaredNorm() + 1.0;  // +1: bias feature

#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < num_classes; ++c) {
        Vector w = Vector::Zero(d + 1);
        Vector a = Vector::Zero(n);
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(i);

        for (int epoch = 0; epoch < max_epochs; ++epoch) {
            std::mt19937_64 rng(mix_seed(fnv1a("dcd"), static_cast<std::uint64_t>(c),
                                         static_cast<std::uint64_t>(epoch)));
            fisher_yates(idx, rng);
            double max_violation = 0.0;
            for (int i : idx) {
                const double yi = (labels[static_cast<std::size_t>(i)] == c) ? 1.0 : -1.0;
                const double margin = X.row(i).dot(w.head(d)) + w(d);
                const double g = yi * margin - 1.0;
                double pg = g;
                if (a(i) <= 0.0) pg = std::min(g, 0.0);
                else if (a(i) >= C) pg = std::max(g, 0.0);
                max_violation = std::max(max_violation, std::abs(pg));
                if (std::abs(pg) > 1e-14) {
                    const double a_new = std::min(std::max(a(i) - g / qii(i), 0.0), C);
                    const double delta = a_new - a(i);
                    if (delta != 0.0) {
                        w.head(d) += delta * yi * X.row(i).transpose();
                        w(d) += delta * yi;
                        a(i) = a_new;
                    }
                }
            }
            if (max_violation < tol) break;
        }
        model.weights.row(c) = w.transpose();
    }
    return model;
}

std::vector<int> predict(const LinearSvmModel& model, const Matrix& X) {
    if (X.rows() == 0) return {};
    if (X.cols() != model.dim) fail("predict: feature dimension mismatch");
    Matrix scores = X * model.weights.leftCols(model.dim).transpose();
    scores.rowwise() += model.weights.col(model.dim).transpose();
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        int best = 0;
        for (int c = 1; c < model.num_classes; ++c)
            if (scores(i, c) > scores(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& actual) {
    if (predicted.size() != actual.size()) fail("accuracy: length mismatch");
    if (predicted.empty()) fail("accuracy: empty input");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == actual[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

void save_kernel_svm(const KernelSvmModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_kernel_svm: cannot write '" + path + "'");
    out << "dksh-ksvm v1\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", m.C);
    out << "C " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", m.bias);
    out << "bias " << buf << "\nn " << m.alpha.size() << "\n";
    for (Eigen::Index i = 0; i < m.alpha.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", m.alpha(i));
        out << static_cast<int>(m.y[static_cast<std::size_t>(i)]) << " " << buf << "\n";
    }
}

KernelSvmModel load_kernel_svm(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_kernel_svm: cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line != "dksh-ksvm v1") fail("load_kernel_svm: bad header");
    KernelSvmModel m;
    std::string key;
    Eigen::Index n = 0;
    in >> key >> m.C >> key >> m.bias >> key >> n;
    m.alpha.resize(n);
    m.y.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        int yi;
        in >> yi >> m.alpha(i);
        m.y[static_cast<std::size_t>(i)] = static_cast<signed char>(yi);
        if (m.alpha(i) > 0.0) m.support_indices.push_back(static_cast<int>(i));
    }
    return m;
}

void save_linear_svm(const LinearSvmModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_linear_svm: cannot write '" + path + "'");
    out << "dksh-lsvm v1\n";
    out << "classes " << m.num_classes << "\ndim " << m.dim << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", m.C);
    out << "C " << buf << "\n";
    for (int c = 0; c < m.num_classes; ++c) {
        for (Eigen::Index j = 0; j <= m.dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m.weights(c, j));
            out << buf << (j == m.dim ? '\n' : ' ');
        }
    }
}

LinearSvmModel load_linear_svm(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_linear_svm: cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line != "dksh-lsvm v1") fail("load_linear_svm: bad header");
    LinearSvmModel m;
    std::string key;
    in >> key >> m.num_classes >> key >> m.dim >> key >> m.C;
    m.weights.resize(m.num_classes, m.dim + 1);
    for (int c = 0; c < m.num_classes; ++c)
        for (Eigen::Index j = 0; j <= m.dim; ++j) in >> m.weights(c, j);
    return m;
}

}  // namespace dksh
