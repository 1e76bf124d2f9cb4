#include "cosgraph/matrix.hpp"

#include "cosgraph/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace cosgraph {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) {
    return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

MutMap view(Matrix& m) {
    return MutMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols) {
        throw ShapeError("matrix buffer of length " + std::to_string(values_.size()) +
                         " does not match shape " + shape_string());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("ragged matrix literal");
        values_.insert(values_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_string() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
    }
    return worst;
}

double max_abs(const Matrix& a) {
    double worst = 0.0;
    for (double v : a.values()) worst = std::max(worst, std::abs(v));
    return worst;
}

Matrix dense_matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    if (out.empty() || a.cols() == 0) return out;
    view(out).noalias() = view(a) * view(b);
    return out;
}

Matrix dense_matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: " + a.shape_string() + "^T x " + b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    if (out.empty() || a.rows() == 0) return out;
    view(out).noalias() = view(a).transpose() * view(b);
    return out;
}

Matrix dense_matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: " + a.shape_string() + " x " + b.shape_string() + "^T");
    }
    Matrix out(a.rows(), b.rows());
    if (out.empty() || a.cols() == 0) return out;
    view(out).noalias() = view(a) * view(b).transpose();
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return 0.0;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

Matrix SparseMatrix::to_dense() const {
    Matrix out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out(r, col_idx[k]) += values[k];
    return out;
}

Matrix SparseMatrix::multiply(const Matrix& x) const {
    if (x.rows() != cols) {
        throw ShapeError("spmm: sparse (" + std::to_string(rows) + "x" + std::to_string(cols) +
                         ") x " + x.shape_string());
    }
    Matrix out(rows, x.cols());
    const std::size_t width = x.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = out.data() + r * width;
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            const double w = values[k];
            const double* src = x.data() + col_idx[k] * width;
            for (std::size_t c = 0; c < width; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

Matrix SparseMatrix::transpose_multiply(const Matrix& x) const {
    if (x.rows() != rows) {
        throw ShapeError("spmm_t: sparse^T (" + std::to_string(cols) + "x" + std::to_string(rows) +
                         ") x " + x.shape_string());
    }
    Matrix out(cols, x.cols());
    const std::size_t width = x.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = x.data() + r * width;
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            const double w = values[k];
            double* dst = out.data() + col_idx[k] * width;
            for (std::size_t c = 0; c < width; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

SparseMatrix block_diagonal(std::span<const SparseMatrix> blocks) {
    SparseMatrix out;
    for (const auto& b : blocks) {
        const std::size_t offset = out.cols;
        for (std::size_t r = 0; r < b.rows; ++r) {
            for (std::size_t k = b.row_ptr[r]; k < b.row_ptr[r + 1]; ++k) {
                out.col_idx.push_back(b.col_idx[k] + offset);
                out.values.push_back(b.values[k]);
            }
            out.row_ptr.push_back(out.col_idx.size());
        }
        out.rows += b.rows;
        out.cols += b.cols;
    }
    return out;
}

} // namespace cosgraph
