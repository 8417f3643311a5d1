#include "dksh/linalg.hpp"

#include <lapacke.h>

#include <cmath>
#include <vector>

namespace dksh {

Matrix gram(const Matrix& X) {
    Matrix D = X * X.transpose();
    Matrix S = 0.5 * (D + D.transpose());
    return S;
}

SymEig sym_eig(const Matrix& A) {
    if (A.rows() != A.cols()) fail("sym_eig: matrix not square");
    const auto n = static_cast<lapack_int>(A.rows());
    SymEig out;
    out.evals.resize(n);
    out.evecs.resize(n, n);
    if (n == 0) return out;

    Matrix work = A;  // dsyevr destroys its input
    lapack_int m = 0;
    std::vector<lapack_int> isuppz(static_cast<std::size_t>(2 * n));
    const lapack_int info = LAPACKE_dsyevr(
        LAPACK_COL_MAJOR, 'V', 'A', 'L', n, work.data(), n, 0.0, 0.0, 0, 0,
        0.0 /* abstol: default */, &m, out.evals.data(), out.evecs.data(), n, isuppz.data());
    if (info != 0) fail(strf("sym_eig: LAPACK dsyevr failed (info=%d)", static_cast<int>(info)));
    if (m != n) fail("sym_eig: dsyevr returned fewer eigenpairs than expected");
    return out;
}

Matrix psd_project(const Matrix& A, SymEig* tape) {
    SymEig e = sym_eig(A);
    Vector clipped = e.evals.cwiseMax(0.0);
    Matrix R = e.evecs * clipped.asDiagonal() * e.evecs.transpose();
    if (tape) *tape = std::move(e);
    Matrix S = 0.5 * (R + R.transpose());
    return S;
}

Matrix psd_project_backprop(const SymEig& tape, const Matrix& gbar) {
    const auto n = tape.evals.size();
    Matrix S = tape.evecs.transpose() * gbar * tape.evecs;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double li = tape.evals(i);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double lj = tape.evals(j);
            double gamma;
            if (std::abs(li - lj) > 1e-12 * std::max(1.0, std::max(std::abs(li), std::abs(lj)))) {
                gamma = (std::max(li, 0.0) - std::max(lj, 0.0)) / (li - lj);
            } else {
                gamma = (0.5 * (li + lj) > 0.0) ? 1.0 : 0.0;
            }
            S(i, j) *= gamma;
        }
    }
    Matrix R = tape.evecs * S * tape.evecs.transpose();
    return R;
}

}  // namespace dksh
