#pragma once

#include <cstddef>
#include <vector>

namespace melm {

// Dense column-major matrix of doubles, leading dimension == rows.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

    double* col(std::size_t j) { return data_.data() + j * rows_; }
    const double* col(std::size_t j) const { return data_.data() + j * rows_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);

// C = A * B through the active kernel table.
Matrix matmul(const Matrix& a, const Matrix& b);

// Frobenius and max-abs norms of (A - B); A for the one-argument forms.
double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

struct LstsqOptions {
    // Optional Tikhonov term: solves min |Hb - Y|^2 + ridge*|b|^2 via row
    // augmentation. Off by default.
    double ridge = 0.0;
};

// Minimum-norm least-squares solution of min_B |H*B - Y|_F.
//
// Tall well-conditioned systems go through blocked Householder QR and wide
// full-row-rank systems through QR of H^T; whenever the triangular factor's
// diagonal signals possible rank deficiency the solver reruns with
// column-pivoted QR followed by a complete orthogonal decomposition, which
// yields the minimum-norm minimizer for any rank. The explicit
// normal-equations pseudoinverse is deliberately not used.
Matrix least_squares_solve(const Matrix& h, const Matrix& y, const LstsqOptions& opts = {});

}  // namespace melm
