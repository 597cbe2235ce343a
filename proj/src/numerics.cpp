#include "tsobs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tsobs/errors.hpp"

namespace tsobs {

namespace {

void check_square_finite(const Matrix& m, const char* who) {
    if (!m.square()) fail(ErrorKind::NonSquare, std::string(who) + ": matrix is not square");
    if (!m.all_finite()) fail(ErrorKind::NonFinite, std::string(who) + ": matrix has non-finite entries");
}

double off_diagonal_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

// ============================ Symmetric eigensolver ============================

SymEigResult sym_eig(const Matrix& m) {
    check_square_finite(m, "sym_eig");
    const std::size_t n = m.rows();

    // Work on the symmetrized copy so tiny asymmetries cannot leak in.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
    Matrix v = Matrix::identity(n);

    const double threshold = 1e-12 * a.frobenius_norm();
    for (int sweep = 0; sweep < 100 && off_diagonal_frobenius(a) > threshold; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Classic two-sided rotation that zeroes a(p,q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    // Ascending eigenvalues with columns permuted alongside; ties keep the
    // lower original index first so results are deterministic.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    SymEigResult result;
    result.eigenvalues.resize(n);
    result.basis = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        result.eigenvalues[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) result.basis(i, j) = v(i, order[j]);
    }
    return result;
}

double max_eig(const Matrix& m) { return sym_eig(m).eigenvalues.back(); }

double min_eig(const Matrix& m) { return sym_eig(m).eigenvalues.front(); }

// ================================= Cholesky =================================

std::optional<Matrix> try_cholesky(const Matrix& m) {
    check_square_finite(m, "cholesky");
    const std::size_t n = m.rows();
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0) return std::nullopt;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

Matrix cholesky(const Matrix& m) {
    auto l = try_cholesky(m);
    if (!l) fail(ErrorKind::NotPositiveDefinite, "cholesky: pivot <= 0, matrix is not positive definite");
    return *l;
}

// ============================== LU solve ==============================

Matrix solve(const Matrix& a, const Matrix& b) {
    check_square_finite(a, "solve");
    if (!b.all_finite()) fail(ErrorKind::NonFinite, "solve: right-hand side has non-finite entries");
    if (a.rows() != b.rows()) fail(ErrorKind::DimensionMismatch, "solve: right-hand side height mismatch");

    const std::size_t n = a.rows();
    const double pivot_floor = 1e-12 * a.max_abs();
    Matrix lu = a;
    Matrix x = b;
    for (std::size_t k = 0; k < n; ++k) {
        // Partial pivoting, first maximal row wins for determinism.
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
        if (std::abs(lu(piv, k)) <= pivot_floor) fail(ErrorKind::Singular, "solve: matrix is singular to working precision");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
            for (std::size_t j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = lu(i, k) / lu(k, k);
            lu(i, k) = f;
            for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
            for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
        }
    }
    for (std::size_t col = 0; col < x.cols(); ++col) {
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x(ii, col);
            for (std::size_t j = ii + 1; j < n; ++j) s -= lu(ii, j) * x(j, col);
            x(ii, col) = s / lu(ii, ii);
        }
    }
    return x;
}

std::vector<double> solve(const Matrix& a, const std::vector<double>& b) {
    Matrix x = solve(a, Matrix::column(b));
    std::vector<double> r(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) r[i] = x(i, 0);
    return r;
}

Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

double condition_estimate(const Matrix& a) {
    check_square_finite(a, "condition_estimate");
    try {
        return a.inf_norm() * inverse(a).inf_norm();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Singular) return std::numeric_limits<double>::infinity();
        throw;
    }
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace tsobs
