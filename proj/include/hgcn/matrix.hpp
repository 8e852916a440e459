#ifndef HGCN_MATRIX_HPP
#define HGCN_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hgcn {

/// Dense row-major matrix of 64-bit reals.
///
/// Plain value type: copies are deep, and all arithmetic helpers return new
/// matrices. Shape violations raise DimensionError with both shapes in the
/// message.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
    static Matrix ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }
    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    /// Bounds-checked element access.
    double at(std::size_t r, std::size_t c) const;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<const double> row(std::size_t r) const noexcept {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }
    std::span<double> row(std::size_t r) noexcept {
        return std::span<double>(data_).subspan(r * cols_, cols_);
    }

    /// "RxC", used in error messages.
    std::string shape_string() const;

    Matrix transpose() const;
    double sum() const noexcept;
    bool all_finite() const noexcept;
    void fill(double value) noexcept;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double c) noexcept;

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double c);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Largest absolute elementwise difference; throws on shape mismatch.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Throws DimensionError naming `op` and both shapes unless shapes match.
void require_same_shape(const Matrix& a, const Matrix& b, const char* op);

} // namespace hgcn

#endif // HGCN_MATRIX_HPP
