#include "dksh/kernel_hasher.hpp"

#include "dksh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace dksh {

std::vector<int> select_landmarks(int n, int R, std::uint64_t seed) {
    if (R < 1) fail("select_landmarks: R must be >= 1");
    if (R > n) fail(strf("select_landmarks: R=%d exceeds node count %d", R, n));
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::mt19937_64 rng(mix_seed(seed, fnv1a("landmarks")));
    fisher_yates(idx, rng);
    idx.resize(static_cast<std::size_t>(R));
    return idx;
}

HashModel solve_hashing(const Matrix& k_rn, const Matrix& k_rr, const SimilarityMatrix& sim,
                        int code_bits, double lambda, bool pick_largest, HashSolveInfo* info) {
    const auto R = k_rn.rows();
    const auto N = k_rn.cols();
    if (k_rr.rows() != R || k_rr.cols() != R) fail("solve_hashing: K_RR shape mismatch");
    if (sim.S.rows() != N || sim.S.cols() != N) fail("solve_hashing: similarity shape mismatch");
    if (code_bits < 1) fail("solve_hashing: code_bits must be >= 1");
    if (code_bits > R) fail("solve_hashing: code_bits must not exceed the landmark count");
    if (!k_rn.allFinite() || !k_rr.allFinite()) fail("solve_hashing: non-finite kernel input");

    // centered landmark Gram: G = (1/N) Kc Kc'
    const Vector rowmean = k_rn.rowwise().mean();
    Matrix kc = k_rn;
    kc.colwise() -= rowmean;
    Matrix G = gram(kc) / static_cast<double>(N);

    // scale-relative stabilization; the literal 1e-10 absolute shift breaks
    // the W'GW = I check whenever the kernel scale is far from O(1)
    const double gscale = std::max(G.diagonal().maxCoeff(), 0.0);
    if (!(gscale > 0.0)) fail("solve_hashing: degenerate centered kernel (G = 0)");
    const double reg = 1e-13 * gscale;
    G.diagonal().array() += reg;

    const SymEig ge = sym_eig(G);  // ascending
    const double lmax = ge.evals(R - 1);
    if (!(lmax > 0.0)) fail("solve_hashing: centered kernel has no positive spectrum");
    // keep directions whose eigenvalues are resolved well enough that
    // whitening stays accurate to ~1e-8 (the W'GW = I check allows 1e-6)
    const double cutoff = 1e-8 * lmax;

    // Working subspace: every eigenpair above the rank cutoff. Truncating to
    // M pairs here would make tr(What' Chat What) invariant over the feasible
    // rotations (the whitened problem needs room to reject bad directions),
    // so the minimization is done over the full numerical rank of G.
    int rank = 0;
    while (rank < R && ge.evals(R - 1 - rank) >= cutoff) ++rank;
    if (rank == 0) fail("solve_hashing: centered kernel rank is zero at the working precision");
    const int M = std::min(code_bits, rank);
    if (M < code_bits)
        log_warn(strf("solve_hashing: G rank %d < requested %d bits, reducing", rank, code_bits));

    Matrix T(R, rank);
    Vector lam(rank);
    for (int k = 0; k < rank; ++k) {
        T.col(k) = ge.evecs.col(R - 1 - k);
        lam(k) = ge.evals(R - 1 - k);
    }
    const Vector lam_isqrt = lam.cwiseSqrt().cwiseInverse();

    // C = K L K' + lambda K_RR with L = diag(S1) - S applied implicitly
    const Vector s_rowsum = sim.S * Vector::Ones(N);
    Matrix kl = k_rn * s_rowsum.asDiagonal();
    kl.noalias() -= k_rn * sim.S;
    Matrix C = kl * k_rn.transpose();
    C.noalias() += lambda * k_rr;
    const Matrix c_sym = 0.5 * (C + C.transpose());

    Matrix c_hat = lam_isqrt.asDiagonal() * (T.transpose() * c_sym * T) * lam_isqrt.asDiagonal();
    c_hat = 0.5 * (c_hat + c_hat.transpose()).eval();

    const SymEig ce = sym_eig(c_hat);  // ascending: smallest trace first
    Matrix what(rank, M);
    for (int k = 0; k < M; ++k)
        what.col(k) = pick_largest ? ce.evecs.col(rank - 1 - k) : ce.evecs.col(k);

    HashModel model;
    model.W = T * lam_isqrt.asDiagonal() * what;
    model.b = (model.W.transpose() * k_rn).rowwise().mean();
    model.code_bits = M;
    model.lambda = lambda;

    if (info) {
        info->requested_bits = code_bits;
        info->g_evals = lam;
        info->c_hat_evals = ce.evals;
        info->objective = 0.0;
        for (int k = 0; k < M; ++k)
            info->objective += pick_largest ? ce.evals(rank - 1 - k) : ce.evals(k);
        const Matrix wgw = model.W.transpose() * G * model.W;
        info->constraint_residual = (wgw - Matrix::Identity(M, M)).cwiseAbs().maxCoeff();
        info->max_eigen_residual = 0.0;
        for (int k = 0; k < rank; ++k) {
            const double theta = ce.evals(k);
            info->max_eigen_residual = std::max(
                info->max_eigen_residual, (c_hat * ce.evecs.col(k) - theta * ce.evecs.col(k)).norm());
        }
    }
    return model;
}

Eigen::MatrixXi encode(const Matrix& k_cols, const HashModel& model) {
    if (k_cols.rows() != model.W.rows()) fail("encode: kernel column dimension mismatch");
    if (k_cols.cols() < 1) fail("encode: no columns to encode");
    Matrix activ = model.W.transpose() * k_cols;
    activ.colwise() -= model.b;
    Eigen::MatrixXi codes(k_cols.cols(), model.code_bits);
    for (Eigen::Index i = 0; i < k_cols.cols(); ++i)
        for (int m = 0; m < model.code_bits; ++m) codes(i, m) = activ(m, i) >= 0.0 ? 1 : -1;
    return codes;
}

void save_hash_model(const HashModel& m, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) fail("save_hash_model: cannot write '" + path + "'");
    const char magic[8] = {'D', 'K', 'S', 'H', 'H', 'M', '0', '1'};
    std::fwrite(magic, 1, 8, f);
    const std::int64_t R = static_cast<std::int64_t>(m.landmarks.size());
    const std::int64_t M = m.code_bits;
    std::fwrite(&R, sizeof(R), 1, f);
    std::fwrite(&M, sizeof(M), 1, f);
    std::fwrite(&m.lambda, sizeof(m.lambda), 1, f);
    for (int v : m.landmarks) {
        const std::int64_t x = v;
        std::fwrite(&x, sizeof(x), 1, f);
    }
    for (Eigen::Index i = 0; i < m.W.rows(); ++i)  // row-major
        for (Eigen::Index j = 0; j < m.W.cols(); ++j) std::fwrite(&m.W(i, j), sizeof(double), 1, f);
    for (Eigen::Index j = 0; j < m.b.size(); ++j) std::fwrite(&m.b(j), sizeof(double), 1, f);
    std::fclose(f);
}

HashModel load_hash_model(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) fail("load_hash_model: cannot open '" + path + "'");
    char magic[8];
    std::int64_t R = 0, M = 0;
    HashModel m;
    bool ok = std::fread(magic, 1, 8, f) == 8 && std::memcmp(magic, "DKSHHM01", 8) == 0 &&
              std::fread(&R, sizeof(R), 1, f) == 1 && std::fread(&M, sizeof(M), 1, f) == 1 &&
              std::fread(&m.lambda, sizeof(m.lambda), 1, f) == 1 && R > 0 && M > 0;
    if (ok) {
        m.landmarks.resize(static_cast<std::size_t>(R));
        for (auto& v : m.landmarks) {
            std::int64_t x = 0;
            ok = ok && std::fread(&x, sizeof(x), 1, f) == 1;
            v = static_cast<int>(x);
        }
        m.W.resize(R, M);
        for (Eigen::Index i = 0; i < R && ok; ++i)
            for (Eigen::Index j = 0; j < M && ok; ++j)
                ok = std::fread(&m.W(i, j), sizeof(double), 1, f) == 1;
        m.b.resize(M);
        for (Eigen::Index j = 0; j < M && ok; ++j) ok = std::fread(&m.b(j), sizeof(double), 1, f) == 1;
        m.code_bits = static_cast<int>(M);
    }
    std::fclose(f);
    if (!ok) fail("load_hash_model: malformed file '" + path + "'");
    return m;
}

void save_codes(const Eigen::MatrixXi& codes, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("save_codes: cannot write '" + path + "'");
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        out << i;
        for (Eigen::Index j = 0; j < codes.cols(); ++j) out << ' ' << codes(i, j);
        out << '\n';
    }
}

Eigen::MatrixXi load_codes(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("load_codes: cannot open '" + path + "'");
    std::vector<std::vector<int>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        long long idx = 0;
        ss >> idx;
        std::vector<int> bits;
        int b;
        while (ss >> b) bits.push_back(b);
        if (static_cast<long long>(rows.size()) != idx) fail("load_codes: non-contiguous node index");
        rows.push_back(std::move(bits));
    }
    if (rows.empty()) fail("load_codes: empty file");
    Eigen::MatrixXi codes(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) fail("load_codes: ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return codes;
}

}  // namespace dksh
