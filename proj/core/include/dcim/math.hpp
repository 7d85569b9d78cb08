#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dcim {

/// Dense vector of doubles.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  Vector(std::initializer_list<double> values) : values_(values) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  /// Nested rows; every row must have the same length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Probability clamp used by every log-likelihood term.
inline constexpr double kProbabilityClamp = 1e-7;

/// m * v.
Vector mat_vec(const Matrix& m, const Vector& v);
/// m^T * v without materializing the transpose.
Vector mat_t_vec(const Matrix& m, const Vector& v);
/// u * v^T.
Matrix outer(const Vector& u, const Vector& v);
Matrix transpose(const Matrix& m);

Vector add(const Vector& u, const Vector& v);

double sigmoid(double x) noexcept;
Vector sigmoid(const Vector& v);
Vector tanh_act(const Vector& v);

Vector softmax(const Vector& v);
Vector log_softmax(const Vector& v);

/// Summed binary cross-entropy of predicted means against target means,
/// with predictions clamped to [kProbabilityClamp, 1 - kProbabilityClamp].
double bce_means(const Vector& target, const Vector& predicted);
double bce_means(std::span<const double> target, std::span<const double> predicted);

}  // namespace dcim
