#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gsplab {

/// Dense row-major matrix of doubles.
///
/// Graph shift operators, signals (n x F feature matrices), filter taps and
/// eigenvector bases all live in this one type. Entries are stored
/// contiguously so that a row is a `std::span`.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  /// n x 1 matrix holding `values`.
  static Matrix column(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::vector<double> col(std::size_t j) const;
  void set_col(std::size_t j, std::span<const double> values);

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without forming the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// this += s * x, shapes must agree.
void axpy(double s, const Matrix& x, Matrix& y);

/// Elementwise (Hadamard) product.
Matrix hadamard(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& m) noexcept;
double frobenius_norm(const Matrix& m) noexcept;
double sum(const Matrix& m) noexcept;
bool all_finite(const Matrix& m) noexcept;

/// Largest |a_ij - a_ji|; requires a square matrix.
double asymmetry(const Matrix& m);

/// (m + m^T) / 2.
Matrix symmetrized(const Matrix& m);

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace gsplab
