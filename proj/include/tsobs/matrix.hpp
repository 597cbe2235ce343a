#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace tsobs {

// Dense row-major matrix of doubles. Everything in this project is small
// (state dimensions <= 4, LMI blocks <= ~12, decision vectors <= ~30), so the
// implementation favors clarity and bitwise-deterministic arithmetic over
// blocking or expression templates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);  // zero-filled
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diag(const std::vector<double>& d);
    static Matrix column(const std::vector<double>& v);
    static Matrix row(const std::vector<double>& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Matrix transposed() const;
    Matrix block(std::size_t i0, std::size_t j0, std::size_t r, std::size_t c) const;
    void set_block(std::size_t i0, std::size_t j0, const Matrix& m);

    // Copies the upper triangle onto the lower one. Used where an expression
    // is symmetric by construction and rounding must not break that exactly.
    void mirror_upper();

    double max_abs() const;
    double inf_norm() const;   // max absolute row sum
    double frobenius_norm() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(double s);

    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator-(const Matrix& m);
Matrix operator*(const Matrix& lhs, const Matrix& rhs);
Matrix operator*(double s, Matrix m);
Matrix operator*(Matrix m, double s);
std::vector<double> operator*(const Matrix& m, const std::vector<double>& v);

// Entrywise equality, used by fixtures and tests; no tolerance.
bool operator==(const Matrix& lhs, const Matrix& rhs);

// max |lhs - rhs| over entries; shapes must match.
double max_abs_diff(const Matrix& lhs, const Matrix& rhs);

}  // namespace tsobs
