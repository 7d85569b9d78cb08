#include "dcim/math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dcim {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows_ * cols_, "Matrix: values length must equal rows*cols");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Vector mat_vec(const Matrix& m, const Vector& v) {
  require(v.size() == m.cols(), "mat_vec: vector length must equal matrix cols");
  Vector out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.data() + i * m.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

Vector mat_t_vec(const Matrix& m, const Vector& v) {
  require(v.size() == m.rows(), "mat_t_vec: vector length must equal matrix rows");
  // Column j accumulates over rows in increasing i, the same order mat_vec
  // uses on an explicit transpose.
  Vector out(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double* row = m.data() + i * m.cols();
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += row[j] * vi;
  }
  return out;
}

Matrix outer(const Vector& u, const Vector& v) {
  Matrix out(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out(i, j) = u[i] * v[j];
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Vector add(const Vector& u, const Vector& v) {
  require(u.size() == v.size(), "add: length mismatch");
  Vector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + v[i];
  return out;
}

double sigmoid(double x) noexcept {
  // exp is only ever evaluated at a non-positive argument.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector sigmoid(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
  return out;
}

Vector tanh_act(const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vector log_softmax(const Vector& v) {
  require(!v.empty(), "log_softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  const double log_z = std::log(sum);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - mx - log_z;
  return out;
}

Vector softmax(const Vector& v) {
  require(!v.empty(), "softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  Vector out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double bce_means(std::span<const double> target, std::span<const double> predicted) {
  require(target.size() == predicted.size(), "bce_means: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double p = std::clamp(predicted[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double t = target[i];
    loss -= t * std::log(p) + (1.0 - t) * std::log1p(-p);
  }
  return loss;
}

double bce_means(const Vector& target, const Vector& predicted) {
  return bce_means(target.span(), predicted.span());
}

}  // namespace dcim
