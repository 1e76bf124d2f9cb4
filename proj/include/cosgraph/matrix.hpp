#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cosgraph {

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Max absolute entrywise difference; throws ShapeError on mismatch.
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);

/// Row-major dense product, backed by Eigen.
Matrix dense_matmul(const Matrix& a, const Matrix& b);
/// aᵀ·b without materialising the transpose.
Matrix dense_matmul_tn(const Matrix& a, const Matrix& b);
/// a·bᵀ without materialising the transpose.
Matrix dense_matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Compressed sparse row matrix. Used for (normalised) adjacency, which is
/// data and never differentiated.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return col_idx.size(); }
    double at(std::size_t r, std::size_t c) const;
    Matrix to_dense() const;

    /// this · x
    Matrix multiply(const Matrix& x) const;
    /// thisᵀ · x
    Matrix transpose_multiply(const Matrix& x) const;
};

/// Stack square sparse blocks along the diagonal.
SparseMatrix block_diagonal(std::span<const SparseMatrix> blocks);

} // namespace cosgraph
