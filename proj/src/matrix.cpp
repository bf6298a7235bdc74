#include "dicca/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dicca/errors.hpp"

namespace dicca {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeMismatch("matrix data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeMismatch("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
}

Vector Matrix::column(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "matrix +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "matrix -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeMismatch(std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
    }
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

double column_norm(const Matrix& a, std::size_t c) {
    double s = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, c) * a(r, c);
    return std::sqrt(s);
}

Matrix take_rows(const Matrix& a, std::span<const std::size_t> index) {
    Matrix out(index.size(), a.cols());
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= a.rows()) throw InvalidIndex("row index out of range");
        std::copy_n(a.row(index[i]).begin(), a.cols(), out.row(i).begin());
    }
    return out;
}

Matrix hconcat(std::span<const Matrix> blocks) {
    if (blocks.empty()) return {};
    const std::size_t n = blocks.front().rows();
    std::size_t width = 0;
    for (const auto& b : blocks) {
        if (b.rows() != n) throw ShapeMismatch("hconcat: blocks differ in row count");
        width += b.cols();
    }
    Matrix out(n, width);
    for (std::size_t r = 0; r < n; ++r) {
        auto dst = out.row(r).begin();
        for (const auto& b : blocks) dst = std::copy(b.row(r).begin(), b.row(r).end(), dst);
    }
    return out;
}

}  // namespace dicca
