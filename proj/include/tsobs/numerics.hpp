#pragma once

#include <optional>
#include <vector>

#include "tsobs/matrix.hpp"

namespace tsobs {

struct SymEigResult {
    std::vector<double> eigenvalues;  // ascending
    Matrix basis;                     // columns are the matching orthonormal eigenvectors
};

// Cyclic Jacobi rotations on the symmetrized input. Converged when the
// off-diagonal Frobenius norm drops below 1e-12 * ||m||_F (at most 100
// sweeps). Throws NonSquare / NonFinite on bad input.
SymEigResult sym_eig(const Matrix& m);

double max_eig(const Matrix& m);
double min_eig(const Matrix& m);

// Lower-triangular factor L with L L^T = m. Throws NotPositiveDefinite as
// soon as a pivot is <= 0; the barrier line search uses try_cholesky to turn
// that into control flow instead.
Matrix cholesky(const Matrix& m);
std::optional<Matrix> try_cholesky(const Matrix& m);

// LU with partial pivoting. Throws Singular when a pivot magnitude falls to
// <= 1e-12 * max|a|. The right-hand side may have any number of columns.
Matrix solve(const Matrix& a, const Matrix& b);
std::vector<double> solve(const Matrix& a, const std::vector<double>& b);
Matrix inverse(const Matrix& a);

// ||a||_inf * ||a^{-1}||_inf, +infinity when a is singular.
double condition_estimate(const Matrix& a);

double norm2(const std::vector<double>& v);

}  // namespace tsobs
