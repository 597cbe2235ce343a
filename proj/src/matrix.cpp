#include "tsobs/matrix.hpp"

#include <cmath>
#include <cstdlib>

#include "tsobs/errors.hpp"

namespace tsobs {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) fail(ErrorKind::DimensionMismatch, "ragged initializer list");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const std::vector<double>& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

Matrix Matrix::column(const std::vector<double>& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

Matrix Matrix::row(const std::vector<double>& v) {
    Matrix m(1, v.size());
    for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix Matrix::block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const {
    if (i0 + r > rows_ || j0 + c > cols_) fail(ErrorKind::DimensionMismatch, "block out of range");
    Matrix b(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(i0 + i, j0 + j);
    return b;
}

void Matrix::set_block(std::size_t i0, std::size_t j0, const Matrix& m) {
    if (i0 + m.rows() > rows_ || j0 + m.cols() > cols_) fail(ErrorKind::DimensionMismatch, "block out of range");
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) (*this)(i0 + i, j0 + j) = m(i, j);
}

void Matrix::mirror_upper() {
    if (!square()) fail(ErrorKind::NonSquare, "mirror_upper needs a square matrix");
    for (std::size_t i = 1; i < rows_; ++i)
        for (std::size_t j = 0; j < i; ++j) (*this)(i, j) = (*this)(j, i);
}

double Matrix::max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
}

double Matrix::inf_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
        m = std::max(m, s);
    }
    return m;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return std::sqrt(s);
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

static void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) fail(ErrorKind::DimensionMismatch, std::string("shape mismatch in ") + op);
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
    check_same_shape(*this, rhs, "operator+");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    check_same_shape(*this, rhs, "operator-");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }

Matrix operator-(const Matrix& m) {
    Matrix r = m;
    return r *= -1.0;
}

Matrix operator*(const Matrix& lhs, const Matrix& rhs) {
    if (lhs.cols() != rhs.rows()) fail(ErrorKind::DimensionMismatch, "shape mismatch in operator*");
    Matrix r(lhs.rows(), rhs.cols());
    for (std::size_t i = 0; i < lhs.rows(); ++i)
        for (std::size_t j = 0; j < rhs.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < lhs.cols(); ++k) s += lhs(i, k) * rhs(k, j);
            r(i, j) = s;
        }
    return r;
}

Matrix operator*(double s, Matrix m) { return m *= s; }
Matrix operator*(Matrix m, double s) { return m *= s; }

std::vector<double> operator*(const Matrix& m, const std::vector<double>& v) {
    if (m.cols() != v.size()) fail(ErrorKind::DimensionMismatch, "shape mismatch in matrix-vector product");
    std::vector<double> r(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

bool operator==(const Matrix& lhs, const Matrix& rhs) {
    return lhs.rows() == rhs.rows() && lhs.cols() == rhs.cols() && lhs.data() == rhs.data();
}

double max_abs_diff(const Matrix& lhs, const Matrix& rhs) {
    check_same_shape(lhs, rhs, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < lhs.data().size(); ++i) m = std::max(m, std::abs(lhs.data()[i] - rhs.data()[i]));
    return m;
}

}  // namespace tsobs
