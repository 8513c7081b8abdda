#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace iipm {

//! Dense row-major matrix of 64-bit floats. The one numeric container used
//! across the library; row and column vectors are 1xN / Nx1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, double fill);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Matrix zeros(std::size_t rows, std::size_t cols);
    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    std::span<const double> row(std::size_t r) const;
    void set_row(std::size_t r, std::span<const double> v);

    bool same_shape(const Matrix& other) const;
    bool all_finite() const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Shape-checked kernels. Mismatches throw std::invalid_argument with the
// offending shapes in the message.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);
Matrix reshape(const Matrix& a, std::size_t rows, std::size_t cols);
//! Adds a 1xC row vector to every row of a RxC matrix.
Matrix add_row_vector(const Matrix& a, const Matrix& row);
//! 1xC column sums.
Matrix column_sums(const Matrix& a);

double max_abs_diff(const Matrix& a, const Matrix& b);

std::string shape_string(const Matrix& m);

//! Shortest decimal string that parses back to exactly the same double;
//! used by every CSV and config writer so emitted files are reproducible
//! byte for byte and lossless on reload.
std::string double_repr(double v);

} // namespace iipm
