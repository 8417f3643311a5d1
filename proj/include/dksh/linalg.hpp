#pragma once

#include "dksh/common.hpp"

namespace dksh {

// X X^T, exactly symmetric (product followed by 0.5*(D + D^T))
Matrix gram(const Matrix& X);

struct SymEig {
    Vector evals;  // ascending
    Matrix evecs;  // columns
};

// Full symmetric eigendecomposition (LAPACK dsyevr).
SymEig sym_eig(const Matrix& A);

// Nearest PSD matrix by eigenvalue clipping at 0. Optional tape keeps the
// raw eigendecomposition for differentiating through the projection.
Matrix psd_project(const Matrix& A, SymEig* tape = nullptr);

// Adjoint of psd_project at the tape point: maps the output-side adjoint
// Gbar to the input-side adjoint via the Daleckii-Krein divided-difference
// matrix of f(x) = max(x, 0).
Matrix psd_project_backprop(const SymEig& tape, const Matrix& gbar);

}  // namespace dksh
