#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "contrast/errors.hpp"

namespace contrast {

/// Dense row-major matrix of 64-bit reals. Deliberately minimal: the library
/// only ever deals in N x m batches and per-row views.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
};

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> v) { return dot(v, v); }

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// C = A * B, A is (n,k), B is (k,m).
Matrix matmul(const Matrix& a, const Matrix& b);

/// C = A * B^T, A is (n,k), B is (m,k).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// C = A^T * B, A is (k,n), B is (k,m).
Matrix matmul_tn(const Matrix& a, const Matrix& b);

}  // namespace contrast
