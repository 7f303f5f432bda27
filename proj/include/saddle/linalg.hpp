#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saddle {

using Vector = std::vector<double>;

// Dense row-major matrix. Sizes here are tiny (n <= 64), so no expression
// templates or blocking.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Vector column(std::size_t j) const;
  Matrix transpose() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vector operator*(const Matrix& a, std::span<const double> x);

double frobenius_norm(const Matrix& a);
// Largest |a_ij - a_ji|.
double asymmetry(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> a);

Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);

// Gaussian elimination with partial pivoting. Returns false when a pivot
// falls below `singular_tol` times the largest row magnitude.
bool solve_linear(Matrix a, Vector b, Vector& x, double singular_tol = 1e-14);

}  // namespace saddle
