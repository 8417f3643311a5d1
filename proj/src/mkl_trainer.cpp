#include "dksh/mkl_trainer.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dksh {

double phi_step(double x, double sigma) { return 1.0 / (1.0 + std::exp(-x / sigma)); }

double phi_step_deriv(double x, double sigma) {
    const double p = phi_step(x, sigma);
    return p * (1.0 - p) / sigma;
}

void TrainerConfig::validate() const {
    if (max_outer_iters < 0) fail("TrainerConfig: max_outer_iters must be >= 0");
    if (!(step_size > 0.0)) fail("TrainerConfig: step_size must be > 0");
    if (!(sigma > 0.0)) fail("TrainerConfig: sigma must be > 0");
    if (!(convergence_tol > 0.0)) fail("TrainerConfig: convergence_tol must be > 0");
    if (!(svm_c > 0.0)) fail("TrainerConfig: svm_c must be > 0");
    if (max_halvings < 0) fail("TrainerConfig: max_halvings must be >= 0");
}

SpanBoundState compute_span_bound(const Matrix& k_train, const KernelSvmModel& svm, double sigma) {
    SpanBoundState st;
    st.sv = svm.support_indices;
    const int s = static_cast<int>(st.sv.size());
    if (s == 0) fail("compute_span_bound: no support vectors");

    if (s == 1) {
        // lone support vector: the hull of the remaining ones is empty, use
        // the distance to the origin
        const int i = st.sv[0];
        st.degenerate = true;
        st.span_sq = Vector::Constant(1, k_train(i, i));
        st.objective = phi_step(svm.alpha(i) * st.span_sq(0) - 1.0, sigma);
        log_warn("compute_span_bound: single support vector, span degenerates to K_ii");
        return st;
    }

    Matrix ktilde(s + 1, s + 1);
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) ktilde(a, b) = k_train(st.sv[static_cast<std::size_t>(a)],
                                                           st.sv[static_cast<std::size_t>(b)]);
    ktilde.row(s).setOnes();
    ktilde.col(s).setOnes();
    ktilde(s, s) = 0.0;

    auto try_invert = [&](double ridge) -> bool {
        Matrix kt = ktilde;
        if (ridge > 0.0) kt.diagonal().head(s).array() += ridge;
        Eigen::PartialPivLU<Matrix> lu(kt);
        if (lu.rcond() < 1e-14) return false;
        st.k_inv = lu.inverse();
        for (int a = 0; a < s; ++a) {
            const double h = st.k_inv(a, a);
            if (!(h > 0.0) || !std::isfinite(h)) return false;
        }
        st.ridge = ridge;
        return true;
    };

    if (!try_invert(0.0) && !try_invert(1e-8))
        fail("compute_span_bound: singular bordered support-vector system");

    st.span_sq.resize(s);
    st.objective = 0.0;
    for (int a = 0; a < s; ++a) {
        st.span_sq(a) = 1.0 / st.k_inv(a, a);
        const double ai = svm.alpha(st.sv[static_cast<std::size_t>(a)]);
        st.objective += phi_step(ai * st.span_sq(a) - 1.0, sigma);
    }
    if (!std::isfinite(st.objective)) fail("compute_span_bound: non-finite objective");
    return st;
}

namespace {

std::vector<int> class_labels_pm1(const LabelMap& labels, const std::vector<int>& train, int cls) {
    std::vector<int> y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        y[i] = labels.node_class[static_cast<std::size_t>(train[i])] == cls ? 1 : -1;
    return y;
}

}  // namespace

TrainState eval_train_state(const Matrix& P, const DeepKernelNet& net, const LabelMap& labels,
                            const Split& split, const TrainerConfig& cfg,
                            const std::vector<Vector>* warm_alphas) {
    TrainState st;
    const Matrix k_full = forward(P, net, &st.tape);
    const auto& train = split.train_nodes;
    const auto nt = static_cast<Eigen::Index>(train.size());

    Matrix k_tr_raw(nt, nt);
    for (Eigen::Index a = 0; a < nt; ++a)
        for (Eigen::Index b = 0; b < nt; ++b)
            k_tr_raw(a, b) = k_full(train[static_cast<std::size_t>(a)], train[static_cast<std::size_t>(b)]);
    st.k_train = psd_project(k_tr_raw, &st.psd_eig);

    // classes actually present in the training set
    std::vector<char> present(static_cast<std::size_t>(labels.num_classes), 0);
    for (int v : train)
        if (labels.node_class[static_cast<std::size_t>(v)] >= 0)
            present[static_cast<std::size_t>(labels.node_class[static_cast<std::size_t>(v)])] = 1;
    for (int c = 0; c < labels.num_classes; ++c) {
        if (present[static_cast<std::size_t>(c)]) st.classes.push_back(c);
        else log_warn(strf("eval_train_state: class %d absent from the training split", c));
    }

    const int nc = static_cast<int>(st.classes.size());
    st.svms.resize(static_cast<std::size_t>(nc));
    std::vector<std::string> errors(static_cast<std::size_t>(nc));
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nc; ++k) {
        try {
            const auto y = class_labels_pm1(labels, train, st.classes[static_cast<std::size_t>(k)]);
            const Vector* warm = (warm_alphas && warm_alphas->size() == static_cast<std::size_t>(nc))
                                     ? &(*warm_alphas)[static_cast<std::size_t>(k)]
                                     : nullptr;
            st.svms[static_cast<std::size_t>(k)] =
                train_kernel_svm(st.k_train, y, cfg.svm_c, cfg.svm_tol, 2000000, warm);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(k)] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) fail("eval_train_state: " + e);

    st.spans.resize(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k) {
        st.spans[static_cast<std::size_t>(k)] =
            compute_span_bound(st.k_train, st.svms[static_cast<std::size_t>(k)], cfg.sigma);
        st.objective += st.spans[static_cast<std::size_t>(k)].objective;
        st.total_svs += static_cast<int>(st.spans[static_cast<std::size_t>(k)].sv.size());
    }
    return st;
}

namespace {

// adjoint of one span objective w.r.t. the (projected) train kernel block
void accumulate_span_adjoint(const SpanBoundState& span, const KernelSvmModel& svm, double sigma,
                             Matrix& kbar_train) {
    const int s = static_cast<int>(span.sv.size());
    if (span.degenerate) {
        const int i = span.sv[0];
        const double ai = svm.alpha(i);
        kbar_train(i, i) += phi_step_deriv(ai * span.span_sq(0) - 1.0, sigma) * ai;
        return;
    }
    // dT/dK~ = H diag(g) H with g_i = phi'(a_i D_i^2 - 1) a_i D_i^4
    Vector g = Vector::Zero(s + 1);
    for (int a = 0; a < s; ++a) {
        const double ai = svm.alpha(span.sv[static_cast<std::size_t>(a)]);
        const double d2 = span.span_sq(a);
        g(a) = phi_step_deriv(ai * d2 - 1.0, sigma) * ai * d2 * d2;
    }
    const Matrix adj = span.k_inv * g.asDiagonal() * span.k_inv;
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b)
            kbar_train(span.sv[static_cast<std::size_t>(a)], span.sv[static_cast<std::size_t>(b)]) +=
                adj(a, b);
}

// adjoint of one elementary kernel w.r.t. its Gram matrix
Matrix kernel_gram_backprop(const Matrix& D, const Matrix& K, const ElemKernel& cfg,
                            const RbfScaleInfo& rbf, const Matrix& kbar) {
    const auto n = D.rows();
    switch (cfg.kind) {
        case KernelKind::linear:
            return kbar;
        case KernelKind::sigmoid:
            return (kbar.array() * cfg.alpha * (1.0 - K.array().square())).matrix();
        case KernelKind::polynomial: {
            Matrix dbar(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double base = cfg.alpha * D(i, j) + cfg.beta;
                    double v = cfg.alpha * cfg.degree;
                    for (int d = 1; d < cfg.degree; ++d) v *= base;
                    dbar(i, j) = kbar(i, j) * v;
                }
            }
            return dbar;
        }
        case KernelKind::rbf: {
            const double geff = rbf.gamma_eff;
            // A(i,j) = coefficient on d(d2_ij); K = exp(-geff d2)
            Matrix A(n, n);
            double e_dot_d2 = 0.0;  // sum_ij kbar_ij K_ij d2_ij (for the median path)
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double d2 = std::max(0.0, D(i, i) + D(j, j) - 2.0 * D(i, j));
                    const double e = kbar(i, j) * K(i, j);
                    A(i, j) = (d2 > 0.0) ? -geff * e : 0.0;
                    e_dot_d2 += e * d2;
                }
            }
            if (rbf.active && !rbf.mid_pairs.empty()) {
                // geff = gamma / median; median = mean of the mid pair distances
                const double mbar = (cfg.gamma / (rbf.median * rbf.median)) * e_dot_d2;
                const double w = mbar / static_cast<double>(rbf.mid_pairs.size());
                for (const auto& [a, b] : rbf.mid_pairs) A(a, b) += w;
            }
            Vector rowsum = A.rowwise().sum();
            Vector colsum = A.colwise().sum().transpose();
            Matrix dbar = -2.0 * A;
            dbar.diagonal() += rowsum + colsum;
            return dbar;
        }
    }
    fail("kernel_gram_backprop: unreachable");
}

}  // namespace

Matrix backprop_output_adjoint(const DeepKernelNet& net, const ForwardTape& tape,
                               const Matrix& abar) {
    const auto n = tape.features.at(0).rows();
    const int L = net.num_layers;
    const int T = net.kernels_per_layer;
    Matrix mbar = abar;

    Matrix grad = Matrix::Zero(L, T);
    for (int l = L - 1; l >= 0; --l) {
        const auto& kernels = tape.kernels.at(static_cast<std::size_t>(l));
        for (int t = 0; t < T; ++t)
            grad(l, t) = kernels[static_cast<std::size_t>(t)].cwiseProduct(mbar).sum();
        if (l == 0) break;

        const auto& D = tape.gram.at(static_cast<std::size_t>(l));
        const auto& F = tape.features.at(static_cast<std::size_t>(l));
        Matrix dbar = Matrix::Zero(n, n);
        for (int t = 0; t < T; ++t) {
            const Matrix kbar_t = net.mu(l, t) * mbar;
            dbar += kernel_gram_backprop(
                D, kernels[static_cast<std::size_t>(t)],
                net.layer_kernels[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)],
                tape.rbf.at(static_cast<std::size_t>(l))[static_cast<std::size_t>(t)], kbar_t);
        }
        Matrix fbar = (dbar + dbar.transpose()) * F;

        // F^(l) = c * M^(l-1)
        const double c = tape.rescale.at(static_cast<std::size_t>(l - 1));
        const auto& M = tape.mixes.at(static_cast<std::size_t>(l - 1));
        if (net.rescale_hidden) {
            const double fro2 = M.squaredNorm();
            const double inner = fbar.cwiseProduct(M).sum();
            mbar = c * fbar - (c * inner / fro2) * M;
        } else {
            mbar = std::move(fbar);
        }
    }

    if (!grad.allFinite()) {
        for (int l = 0; l < L; ++l)
            for (int t = 0; t < T; ++t)
                if (!std::isfinite(grad(l, t)))
                    fail(strf("backprop: non-finite gradient at layer %d, unit %d", l + 1, t + 1));
    }
    return grad;
}

Matrix grad_mu(const DeepKernelNet& net, const TrainState& st, const Split& split, double sigma) {
    const auto& train = split.train_nodes;
    const auto nt = static_cast<Eigen::Index>(train.size());
    const auto n = st.tape.features.at(0).rows();

    // span adjoints on the projected train block
    Matrix kbar_train = Matrix::Zero(nt, nt);
    for (std::size_t k = 0; k < st.spans.size(); ++k)
        accumulate_span_adjoint(st.spans[k], st.svms[k], sigma, kbar_train);

    // through the PSD projection, then scatter into the full kernel adjoint
    Matrix kbar_raw = psd_project_backprop(st.psd_eig, kbar_train);
    kbar_raw = 0.5 * (kbar_raw + kbar_raw.transpose());
    Matrix abar = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < nt; ++a)
        for (Eigen::Index b = 0; b < nt; ++b)
            abar(train[static_cast<std::size_t>(a)], train[static_cast<std::size_t>(b)]) +=
                kbar_raw(a, b);

    return backprop_output_adjoint(net, st.tape, abar);
}

double objective_fixed_alpha(const Matrix& P, const DeepKernelNet& net, const TrainState& base,
                             const Split& split, double sigma) {
    const Matrix k_full = forward(P, net);
    const auto& train = split.train_nodes;
    const auto nt = static_cast<Eigen::Index>(train.size());
    Matrix k_tr(nt, nt);
    for (Eigen::Index a = 0; a < nt; ++a)
        for (Eigen::Index b = 0; b < nt; ++b)
            k_tr(a, b) = k_full(train[static_cast<std::size_t>(a)], train[static_cast<std::size_t>(b)]);
    const Matrix k_psd = psd_project(k_tr);
    double obj = 0.0;
    for (const auto& svm : base.svms) obj += compute_span_bound(k_psd, svm, sigma).objective;
    return obj;
}

DeepKernelNet train(const Matrix& P, DeepKernelNet net, const LabelMap& labels, const Split& split,
                    const TrainerConfig& cfg, std::vector<TrainLogRow>* log) {
    cfg.validate();
    net.validate();
    const int T = net.kernels_per_layer;

    TrainState state = eval_train_state(P, net, labels, split, cfg);
    if (log) log->push_back({0, state.objective, 0.0, state.total_svs});

    DeepKernelNet best = net;
    double best_obj = state.objective;
    double prev_obj = state.objective;

    for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
        const Matrix g = grad_mu(net, state, split, cfg.sigma);

        if (cfg.finite_diff_check) {
            const double h = 1e-5;
            DeepKernelNet probe = net;
            probe.mu(0, 0) = std::max(0.0, net.mu(0, 0) + h);
            const double fp = objective_fixed_alpha(P, probe, state, split, cfg.sigma);
            probe.mu(0, 0) = std::max(0.0, net.mu(0, 0) - h);
            const double fm = objective_fixed_alpha(P, probe, state, split, cfg.sigma);
            const double fd = (fp - fm) / (2.0 * h);
            if (std::abs(fd - g(0, 0)) > 1e-3 * std::max({1e-8, std::abs(fd), std::abs(g(0, 0))}))
                log_warn(strf("train: gradient spot check mismatch (analytic %.6e vs fd %.6e)",
                              g(0, 0), fd));
        }

        double eta = cfg.step_size;
        bool accepted = false;
        DeepKernelNet trial = net;
        for (int h = 0; h <= cfg.max_halvings; ++h) {
            trial.mu = (net.mu - eta * g).cwiseMax(0.0);
            for (int l = 0; l < net.num_layers; ++l) {
                if (!(trial.mu.row(l).maxCoeff() > 0.0)) {
                    trial.mu.row(l).setConstant(1.0 / T);
                    log_warn(strf("train: layer %d projected to zero, reset to uniform", l + 1));
                }
            }
            const double obj = objective_fixed_alpha(P, trial, state, split, cfg.sigma);
            if (obj <= state.objective) {
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if (!accepted) break;  // no descent direction left at the smallest step

        net = trial;
        std::vector<Vector> warm(state.svms.size());
        for (std::size_t k = 0; k < state.svms.size(); ++k) warm[k] = state.svms[k].alpha;
        state = eval_train_state(P, net, labels, split, cfg, &warm);
        if (log) log->push_back({iter, state.objective, eta, state.total_svs});

        if (state.objective < best_obj) {
            best_obj = state.objective;
            best = net;
        }
        if (std::abs(state.objective - prev_obj) <
            cfg.convergence_tol * std::max(1.0, std::abs(prev_obj)))
            break;
        prev_obj = state.objective;
    }
    return best;
}

void save_train_log_csv(const std::vector<TrainLogRow>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_train_log_csv: cannot write '" + path + "'");
    out << "iteration,T_span,step_size,num_support_vectors\n";
    char buf[128];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%d\n", r.iteration, r.t_span, r.step_size,
                      r.num_support_vectors);
        out << buf;
    }
}

}  // namespace dksh
