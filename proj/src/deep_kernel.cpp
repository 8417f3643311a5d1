#include "dksh/deep_kernel.hpp"

#include "dksh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dksh {

const char* kernel_kind_name(KernelKind k) {
    switch (k) {
        case KernelKind::linear: return "linear";
        case KernelKind::rbf: return "rbf";
        case KernelKind::sigmoid: return "sigmoid";
        case KernelKind::polynomial: return "polynomial";
    }
    return "?";
}

KernelKind kernel_kind_from_name(const std::string& name) {
    if (name == "linear") return KernelKind::linear;
    if (name == "rbf") return KernelKind::rbf;
    if (name == "sigmoid") return KernelKind::sigmoid;
    if (name == "polynomial") return KernelKind::polynomial;
    fail("unknown kernel kind '" + name + "'");
}

ElemKernel ElemKernel::linear() { return ElemKernel{KernelKind::linear, 1.0, 1.0, 1.0, 2}; }
ElemKernel ElemKernel::rbf(double gamma) { return ElemKernel{KernelKind::rbf, gamma, 1.0, 1.0, 2}; }
ElemKernel ElemKernel::sigmoid(double alpha, double beta) {
    return ElemKernel{KernelKind::sigmoid, 1.0, alpha, beta, 2};
}
ElemKernel ElemKernel::polynomial(double alpha, double beta, int degree) {
    return ElemKernel{KernelKind::polynomial, 1.0, alpha, beta, degree};
}

void ElemKernel::validate() const {
    if (kind == KernelKind::rbf && !(gamma > 0.0)) fail("ElemKernel: rbf gamma must be > 0");
    if (kind == KernelKind::polynomial && degree < 1) fail("ElemKernel: polynomial degree must be >= 1");
}

DeepKernelNet DeepKernelNet::standard(int num_layers, int kernels_per_layer) {
    DeepKernelNet net;
    net.num_layers = num_layers;
    net.kernels_per_layer = kernels_per_layer;
    const ElemKernel family[4] = {ElemKernel::linear(), ElemKernel::rbf(1.0),
                                  ElemKernel::sigmoid(-1e-4, 1.0),
                                  ElemKernel::polynomial(1.0, 1.0, 2)};
    net.layer_kernels.resize(static_cast<std::size_t>(num_layers));
    for (auto& row : net.layer_kernels) {
        row.resize(static_cast<std::size_t>(kernels_per_layer));
        for (int t = 0; t < kernels_per_layer; ++t) row[static_cast<std::size_t>(t)] = family[t % 4];
    }
    net.mu = Matrix::Constant(num_layers, kernels_per_layer, 1.0 / kernels_per_layer);
    return net;
}

void DeepKernelNet::validate() const {
    if (num_layers < 1) fail("DeepKernelNet: num_layers must be >= 1");
    if (kernels_per_layer < 1) fail("DeepKernelNet: kernels_per_layer must be >= 1");
    if (static_cast<int>(layer_kernels.size()) != num_layers)
        fail("DeepKernelNet: layer_kernels size mismatch");
    for (const auto& row : layer_kernels) {
        if (static_cast<int>(row.size()) != kernels_per_layer)
            fail("DeepKernelNet: kernel row size mismatch");
        for (const auto& k : row) k.validate();
    }
    if (mu.rows() != num_layers || mu.cols() != kernels_per_layer)
        fail("DeepKernelNet: mu shape mismatch");
    if ((mu.array() < 0.0).any()) fail("DeepKernelNet: mu must be nonnegative");
    for (int l = 0; l < num_layers; ++l)
        if (!(mu.row(l).maxCoeff() > 0.0))
            fail(strf("DeepKernelNet: layer %d has no positive mu entry", l + 1));
}

namespace {

// median of the pairwise squared distances d2(i,j), i<j, plus the pair(s)
// realizing it (bit-exact match scan, first occurrence wins)
void median_of_pairs(const Matrix& d2, RbfScaleInfo& info) {
    const auto n = d2.rows();
    const std::size_t m = static_cast<std::size_t>(n) * (n - 1) / 2;
    info.mid_pairs.clear();
    if (m == 0) {
        info.median = 0.0;
        return;
    }
    std::vector<double> vals;
    vals.reserve(m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) vals.push_back(d2(i, j));

    auto find_pair = [&](double v) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (d2(i, j) == v) return std::make_pair(static_cast<int>(i), static_cast<int>(j));
        return std::make_pair(-1, -1);
    };

    if (m % 2 == 1) {
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(m / 2), vals.end());
        const double v = vals[m / 2];
        info.median = v;
        info.mid_pairs.push_back(find_pair(v));
    } else {
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(m / 2), vals.end());
        const double hi = vals[m / 2];
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(m / 2 - 1),
                         vals.begin() + static_cast<std::ptrdiff_t>(m / 2));
        const double lo = vals[m / 2 - 1];
        info.median = 0.5 * (lo + hi);
        info.mid_pairs.push_back(find_pair(lo));
        if (hi != lo) info.mid_pairs.push_back(find_pair(hi));
    }
}

Matrix squared_distances(const Matrix& D) {
    const auto n = D.rows();
    Matrix d2(n, n);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            d2(i, j) = std::max(0.0, D(i, i) + D(j, j) - 2.0 * D(i, j));
    return d2;
}

}  // namespace

Matrix kernel_from_gram(const Matrix& D, const ElemKernel& k, bool median_rbf, RbfScaleInfo* info) {
    k.validate();
    const auto n = D.rows();
    switch (k.kind) {
        case KernelKind::linear:
            return D;
        case KernelKind::sigmoid: {
            Matrix K(n, n);
#pragma omp parallel for schedule(static)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) K(i, j) = std::tanh(k.alpha * D(i, j) + k.beta);
            return K;
        }
        case KernelKind::polynomial: {
            Matrix K(n, n);
#pragma omp parallel for schedule(static)
            for (Eigen::Index j = 0; j < n; ++j) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double base = k.alpha * D(i, j) + k.beta;
                    double v = base;
                    for (int d = 1; d < k.degree; ++d) v *= base;
                    K(i, j) = v;
                }
            }
            return K;
        }
        case KernelKind::rbf: {
            const Matrix d2 = squared_distances(D);
            double geff = k.gamma;
            RbfScaleInfo local;
            RbfScaleInfo& ri = info ? *info : local;
            ri.active = false;
            if (median_rbf) {
                median_of_pairs(d2, ri);
                if (ri.median > 0.0) {
                    geff = k.gamma / ri.median;
                    ri.active = true;
                } else {
                    ri.mid_pairs.clear();
                }
            }
            ri.gamma_eff = geff;
            Matrix K(n, n);
#pragma omp parallel for schedule(static)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index i = 0; i < n; ++i) K(i, j) = std::exp(-geff * d2(i, j));
            return K;
        }
    }
    fail("kernel_from_gram: unreachable");
}

Matrix elementary_kernel(const Matrix& X, const ElemKernel& k, bool median_rbf, RbfScaleInfo* info) {
    if (!X.allFinite()) fail("elementary_kernel: non-finite input");
    return kernel_from_gram(gram(X), k, median_rbf, info);
}

Matrix forward(const Matrix& P, const DeepKernelNet& net, ForwardTape* tape) {
    net.validate();
    if (!P.allFinite()) fail("forward: non-finite input");
    const int L = net.num_layers;
    const int T = net.kernels_per_layer;
    const auto n = P.rows();

    if (tape) *tape = ForwardTape{};

    Matrix F = P;
    Matrix M;
    for (int l = 0; l < L; ++l) {
        Matrix D = gram(F);
        std::vector<Matrix> ks(static_cast<std::size_t>(T));
        std::vector<RbfScaleInfo> infos(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) {
            const auto& cfg = net.layer_kernels[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
            ks[static_cast<std::size_t>(t)] =
                kernel_from_gram(D, cfg, net.median_rbf, &infos[static_cast<std::size_t>(t)]);
            if (!ks[static_cast<std::size_t>(t)].allFinite())
                fail(strf("forward: non-finite kernel at layer %d, unit %d (%s)", l + 1, t + 1,
                          kernel_kind_name(cfg.kind)));
        }
        M = Matrix::Zero(n, n);
        for (int t = 0; t < T; ++t) M.noalias() += net.mu(l, t) * ks[static_cast<std::size_t>(t)];

        if (tape) {
            tape->features.push_back(F);
            tape->gram.push_back(std::move(D));
            tape->kernels.push_back(std::move(ks));
            tape->mixes.push_back(M);
            tape->rbf.push_back(std::move(infos));
        }

        if (l + 1 < L) {
            double c = 1.0;
            if (net.rescale_hidden) {
                const double fro = M.norm();
                if (!(fro > 0.0)) fail(strf("forward: zero mix feeding layer %d", l + 2));
                c = std::sqrt(static_cast<double>(n)) / fro;
            }
            F = c * M;
            if (tape) tape->rescale.push_back(c);
        }
    }
    return M;
}

Matrix forward_slice(const Matrix& P, const DeepKernelNet& net, const std::vector<int>& landmarks) {
    const auto n = P.rows();
    for (int r : landmarks)
        if (r < 0 || r >= n) fail(strf("forward_slice: landmark %d out of range [0,%lld)", r,
                                       static_cast<long long>(n)));
    {
        std::vector<int> sorted(landmarks);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            log_warn("forward_slice: duplicate landmark indices");
    }
    const Matrix K = forward(P, net);
    Matrix rows(static_cast<Eigen::Index>(landmarks.size()), n);
    for (std::size_t r = 0; r < landmarks.size(); ++r)
        rows.row(static_cast<Eigen::Index>(r)) = K.row(landmarks[r]);
    return rows;
}

void save_net(const DeepKernelNet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_net: cannot write '" + path + "'");
    out << "dksh-net v1\n";
    out << "layers " << net.num_layers << "\n";
    out << "kernels_per_layer " << net.kernels_per_layer << "\n";
    out << "rescale_hidden " << (net.rescale_hidden ? 1 : 0) << "\n";
    out << "median_rbf " << (net.median_rbf ? 1 : 0) << "\n";
    char buf[256];
    for (int l = 0; l < net.num_layers; ++l) {
        for (int t = 0; t < net.kernels_per_layer; ++t) {
            const auto& k = net.layer_kernels[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
            std::snprintf(buf, sizeof(buf), "kernel %d %d %s gamma %.17g alpha %.17g beta %.17g degree %d\n",
                          l + 1, t + 1, kernel_kind_name(k.kind), k.gamma, k.alpha, k.beta, k.degree);
            out << buf;
        }
    }
    for (int l = 0; l < net.num_layers; ++l) {
        for (int t = 0; t < net.kernels_per_layer; ++t) {
            std::snprintf(buf, sizeof(buf), "mu %d %d %.17g\n", l + 1, t + 1, net.mu(l, t));
            out << buf;
        }
    }
}

DeepKernelNet load_net(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_net: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "dksh-net v1") fail("load_net: bad header in '" + path + "'");

    DeepKernelNet net;
    net.layer_kernels.clear();
    int flag = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "layers") {
            ss >> net.num_layers;
            net.layer_kernels.resize(static_cast<std::size_t>(net.num_layers));
        } else if (key == "kernels_per_layer") {
            ss >> net.kernels_per_layer;
            for (auto& row : net.layer_kernels)
                row.resize(static_cast<std::size_t>(net.kernels_per_layer));
            net.mu = Matrix::Zero(net.num_layers, net.kernels_per_layer);
        } else if (key == "rescale_hidden") {
            ss >> flag;
            net.rescale_hidden = flag != 0;
        } else if (key == "median_rbf") {
            ss >> flag;
            net.median_rbf = flag != 0;
        } else if (key == "kernel") {
            int l = 0, t = 0;
            std::string kind, pk;
            ss >> l >> t >> kind;
            ElemKernel k;
            k.kind = kernel_kind_from_name(kind);
            while (ss >> pk) {
                if (pk == "gamma") ss >> k.gamma;
                else if (pk == "alpha") ss >> k.alpha;
                else if (pk == "beta") ss >> k.beta;
                else if (pk == "degree") ss >> k.degree;
                else fail("load_net: unknown kernel field '" + pk + "'");
            }
            net.layer_kernels.at(static_cast<std::size_t>(l - 1)).at(static_cast<std::size_t>(t - 1)) = k;
        } else if (key == "mu") {
            int l = 0, t = 0;
            double v = 0;
            ss >> l >> t >> v;
            net.mu(l - 1, t - 1) = v;
        } else {
            fail("load_net: unknown key '" + key + "'");
        }
    }
    net.validate();
    return net;
}

std::string net_descriptor(const DeepKernelNet& net) {
    std::ostringstream ss;
    ss << "L=" << net.num_layers << ";T=" << net.kernels_per_layer
       << ";rescale=" << net.rescale_hidden << ";median_rbf=" << net.median_rbf;
    char buf[256];
    for (int l = 0; l < net.num_layers; ++l) {
        for (int t = 0; t < net.kernels_per_layer; ++t) {
            const auto& k = net.layer_kernels[static_cast<std::size_t>(l)][static_cast<std::size_t>(t)];
            std::snprintf(buf, sizeof(buf), ";k%d.%d=%s,%.17g,%.17g,%.17g,%d;mu=%.17g", l + 1, t + 1,
                          kernel_kind_name(k.kind), k.gamma, k.alpha, k.beta, k.degree, net.mu(l, t));
            ss << buf;
        }
    }
    return ss.str();
}

}  // namespace dksh
