#include "moc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "moc/error.hpp"

namespace moc {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill)
{
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values))
{
    if (values_.size() != rows_ * cols_) {
        throw Error(ErrorKind::DimensionMismatch,
                    "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " given " +
                        std::to_string(values_.size()) + " values");
    }
}

Vector Matrix::column(std::size_t c) const
{
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "dot of lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        acc += a[k] * b[k];
    }
    return acc;
}

double l2_norm(std::span<const double> v)
{
    return std::sqrt(dot(v, v));
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Vector l2_normalize(std::span<const double> v)
{
    const double norm = l2_norm(v);
    if (!(norm >= kNormEpsilon)) {
        throw Error(ErrorKind::NormTooSmall, "vector norm " + std::to_string(norm) + " below 1e-12");
    }
    Vector out(v.begin(), v.end());
    for (double& x : out) {
        x /= norm;
    }
    return out;
}

Vector matvec(const Matrix& a, std::span<const double> w)
{
    if (a.cols() != w.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "matrix has " + std::to_string(a.cols()) + " columns, vector has " + std::to_string(w.size()));
    }
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        out[i] = dot(a.row(i), w);
    }
    return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.cols()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.cols()));
    }
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            out(i, j) = dot(a.row(i), b.row(j));
        }
    }
    return out;
}

Vector softmax(std::span<const double> v)
{
    Vector out(v.begin(), v.end());
    if (out.empty()) {
        return out;
    }
    const double peak = *std::max_element(out.begin(), out.end());
    double total = 0.0;
    for (double& x : out) {
        x = std::exp(x - peak);
        total += x;
    }
    for (double& x : out) {
        x /= total;
    }
    return out;
}

std::vector<std::size_t> top_k_indices(std::span<const double> v, std::size_t k)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, v.size());
    auto before = [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) {
            return v[a] > v[b];
        }
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), before);
    order.resize(take);
    return order;
}

} // namespace moc
