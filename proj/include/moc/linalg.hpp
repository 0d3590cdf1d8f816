#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace moc {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    Vector column(std::size_t c) const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

inline constexpr double kNormEpsilon = 1e-12;

/// Throws NormTooSmall when the norm is below kNormEpsilon.
Vector l2_normalize(std::span<const double> v);

/// out[i] = <row i of a, w>.
Vector matvec(const Matrix& a, std::span<const double> w);

/// a * b^T, i.e. out(i, j) = <row i of a, row j of b>.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);

/// Max-subtracted softmax.
Vector softmax(std::span<const double> v);

/// Indices of the min(k, n) largest values, descending by value, ties by ascending index.
std::vector<std::size_t> top_k_indices(std::span<const double> v, std::size_t k);

} // namespace moc
