#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "idrl/errors.hpp"
#include "idrl/rng.hpp"

namespace idrl {

// Dense row-major float64 matrix. The heavy kernels below map the storage
// into Eigen; everything else in the library works on this plain struct.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major, size == rows * cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  std::span<double> row(std::size_t i) {
    return {data.data() + i * cols, cols};
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

namespace detail {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using MutMap = Eigen::Map<EigenRowMajor>;

inline ConstMap map(const Matrix& m) {
  return ConstMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                  static_cast<Eigen::Index>(m.cols));
}
inline MutMap map(Matrix& m) {
  return MutMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
                static_cast<Eigen::Index>(m.cols));
}

}  // namespace detail

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw ConfigError("matmul: inner dimensions disagree (" +
                      std::to_string(a.cols) + " vs " + std::to_string(b.rows) + ")");
  Matrix c(a.rows, b.cols);
  if (c.empty() || a.cols == 0) return c;
  detail::map(c).noalias() = detail::map(a) * detail::map(b);
  return c;
}

// C = A^T * B  with A (n x k), B (n x m) -> (k x m)
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows)
    throw ConfigError("matmul_tn: row counts disagree");
  Matrix c(a.cols, b.cols);
  if (c.empty() || a.rows == 0) return c;
  detail::map(c).noalias() = detail::map(a).transpose() * detail::map(b);
  return c;
}

// C = A * B^T  with A (n x k), B (m x k) -> (n x m)
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols)
    throw ConfigError("matmul_nt: column counts disagree");
  Matrix c(a.rows, b.rows);
  if (c.empty() || a.cols == 0) return c;
  detail::map(c).noalias() = detail::map(a) * detail::map(b).transpose();
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

// y = A * x
inline std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols != x.size()) throw ConfigError("matvec: dimension mismatch");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double acc = 0.0;
    const double* row = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

// Lower Cholesky factor of a symmetric positive-definite matrix.
inline Matrix cholesky_lower(const Matrix& a) {
  if (a.rows != a.cols) throw ConfigError("cholesky: matrix not square");
  Eigen::LLT<detail::EigenRowMajor> llt(detail::map(a));
  if (llt.info() != Eigen::Success)
    throw ConfigError("cholesky: matrix not positive definite");
  Matrix l(a.rows, a.cols);
  detail::map(l) = llt.matrixL();
  return l;
}

// Random orthogonal matrix: QR of a Gaussian draw, sign-fixed so the
// factorization is unique.
inline Matrix random_orthogonal(std::size_t d, Rng& rng) {
  Matrix g(d, d);
  for (double& v : g.data) v = rng.normal();
  Eigen::HouseholderQR<detail::EigenRowMajor> qr(detail::map(g));
  detail::EigenRowMajor q = qr.householderQ();
  detail::EigenRowMajor r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < d; ++j)
    if (r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) < 0)
      q.col(static_cast<Eigen::Index>(j)) *= -1.0;
  Matrix out(d, d);
  detail::map(out) = q;
  return out;
}

}  // namespace idrl
