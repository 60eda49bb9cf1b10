/*
 * Copyright 2026 The ntkal Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "ntkal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ntkal/error.hpp"
#include "ntkal/parallel.hpp"

namespace ntkal {

namespace {

std::string dims(const Matrix& m) { return m.shape_string(); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": operand shapes " + dims(a) + " and " +
                     dims(b) + " differ");
  }
}

// c[rows, :] += a[rows, :] · b, i-k-j order with four rows sharing each b row.
void gemm_rows(const Matrix& a, const Matrix& b, Matrix& c, std::size_t r0,
               std::size_t r1) {
  const std::size_t kdim = a.cols();
  const std::size_t n = b.cols();
  constexpr std::size_t kBlockK = 256;
  constexpr std::size_t kBlockN = 512;
  const double* bp = b.data().data();
  for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
    const std::size_t j1 = std::min(n, j0 + kBlockN);
    for (std::size_t k0 = 0; k0 < kdim; k0 += kBlockK) {
      const std::size_t k1 = std::min(kdim, k0 + kBlockK);
      std::size_t i = r0;
      for (; i + 4 <= r1; i += 4) {
        double* c0 = &c(i, 0);
        double* c1 = &c(i + 1, 0);
        double* c2 = &c(i + 2, 0);
        double* c3 = &c(i + 3, 0);
        for (std::size_t k = k0; k < k1; ++k) {
          const double a0 = a(i, k), a1 = a(i + 1, k), a2 = a(i + 2, k),
                       a3 = a(i + 3, k);
          const double* brow = bp + k * n;
          for (std::size_t j = j0; j < j1; ++j) {
            const double bv = brow[j];
            c0[j] += a0 * bv;
            c1[j] += a1 * bv;
            c2[j] += a2 * bv;
            c3[j] += a3 * bv;
          }
        }
      }
      for (; i < r1; ++i) {
        double* ci = &c(i, 0);
        for (std::size_t k = k0; k < k1; ++k) {
          const double av = a(i, k);
          const double* brow = bp + k * n;
          for (std::size_t j = j0; j < j1; ++j) ci[j] += av * brow[j];
        }
      }
    }
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw ShapeError("select_rows: index " + std::to_string(indices[i]) +
                       " out of range for " + shape_string());
    }
    std::copy_n(row(indices[i]).begin(), cols_, out.row(i).begin());
  }
  return out;
}

Matrix Matrix::row_block(std::size_t begin, std::size_t count) const {
  if (begin + count > rows_) {
    throw ShapeError("row_block: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") exceed " + shape_string());
  }
  std::vector<double> d(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                        data_.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols_));
  return Matrix(count, cols_, std::move(d));
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, c);
  return out;
}

void Matrix::append_rows(const Matrix& other) {
  if (rows_ == 0 && cols_ == 0) {
    *this = other;
    return;
  }
  if (other.cols_ != cols_) {
    throw ShapeError("append_rows: " + shape_string() + " and " + other.shape_string());
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible operands " + dims(a) + " x " + dims(b));
  }
  Matrix c(a.rows(), b.cols());
  if (c.empty() || a.cols() == 0) return c;
  constexpr std::size_t kRowBlock = 32;
  const std::size_t blocks = (a.rows() + kRowBlock - 1) / kRowBlock;
  const double work = static_cast<double>(a.rows()) * a.cols() * b.cols();
  auto body = [&](std::size_t blk) {
    const std::size_t r0 = blk * kRowBlock;
    gemm_rows(a, b, c, r0, std::min(a.rows(), r0 + kRowBlock));
  };
  if (work < 1e6) {
    for (std::size_t blk = 0; blk < blocks; ++blk) body(blk);
  } else {
    parallel_for(blocks, body);
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: incompatible operands " + dims(a) + " x " + dims(b) +
                     "^T");
  }
  return matmul(a, b.transpose());
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: incompatible operands " + dims(a) + "^T x " +
                     dims(b));
  }
  return matmul(a.transpose(), b);
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (double& v : c.data()) v *= s;
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] *= bd[i];
  return c;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  Matrix out = top;
  out.append_rows(bottom);
  return out;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

double relative_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "relative_error");
  const double denom = std::max(frobenius_norm(b), std::numeric_limits<double>::min());
  return frobenius_norm(a - b) / denom;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(max_abs(a), std::numeric_limits<double>::min());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

namespace {

// Returns the failing pivot, or n on success.
std::size_t try_factor(const Matrix& a, double jitter, Matrix& lower) {
  const std::size_t n = a.rows();
  lower = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto lj = lower.row(j);
    double d = a(j, j) + jitter;
    for (std::size_t k = 0; k < j; ++k) d -= lj[k] * lj[k];
    if (!(d > 0.0) || !std::isfinite(d)) return j;
    const double ljj = std::sqrt(d);
    lower(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const auto li = lower.row(i);
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / ljj;
    }
  }
  return n;
}

}  // namespace

CholeskyFactor cholesky(const Matrix& a, const JitterPolicy& policy) {
  if (a.rows() != a.cols()) {
    throw ContractError("cholesky: matrix " + dims(a) + " is not square");
  }
  if (!is_symmetric(a, 1e-10)) {
    throw ContractError("cholesky: matrix is not symmetric");
  }
  const std::size_t n = a.rows();
  double mean_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_diag += a(i, i);
  mean_diag = n > 0 ? mean_diag / static_cast<double>(n) : 0.0;

  CholeskyFactor f;
  std::size_t pivot = 0;
  for (double rung : policy.ladder) {
    const double jitter = rung * mean_diag;
    if (rung > 0.0 && !(jitter > 0.0)) continue;
    pivot = try_factor(a, jitter, f.lower);
    if (pivot == n) {
      f.jitter_applied = jitter;
      return f;
    }
  }
  throw NotPositiveDefinite(
      "cholesky: not positive definite at pivot " + std::to_string(pivot) +
          " after maximal jitter",
      pivot);
}

Matrix forward_solve(const CholeskyFactor& f, const Matrix& b) {
  const std::size_t n = f.dim();
  if (b.rows() != n) {
    throw ShapeError("forward_solve: factor dimension " + std::to_string(n) +
                     " vs right-hand side " + dims(b));
  }
  Matrix y = b;
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    auto yi = y.row(i);
    const auto li = f.lower.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double lik = li[k];
      if (lik == 0.0) continue;
      const auto yk = y.row(k);
      for (std::size_t c = 0; c < m; ++c) yi[c] -= lik * yk[c];
    }
    const double inv = 1.0 / li[i];
    for (std::size_t c = 0; c < m; ++c) yi[c] *= inv;
  }
  return y;
}

Matrix backward_solve(const CholeskyFactor& f, const Matrix& b) {
  const std::size_t n = f.dim();
  if (b.rows() != n) {
    throw ShapeError("backward_solve: factor dimension " + std::to_string(n) +
                     " vs right-hand side " + dims(b));
  }
  Matrix x = b;
  const std::size_t m = b.cols();
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    const auto li = f.lower.row(ii);
    const double inv = 1.0 / li[ii];
    for (std::size_t c = 0; c < m; ++c) xi[c] *= inv;
    for (std::size_t k = 0; k < ii; ++k) {
      const double lik = li[k];
      if (lik == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t c = 0; c < m; ++c) xk[c] -= lik * xi[c];
    }
  }
  return x;
}

Matrix chol_solve(const CholeskyFactor& f, const Matrix& b) {
  if (b.rows() != f.dim()) {
    throw ShapeError("chol_solve: factor dimension " + std::to_string(f.dim()) +
                     " vs right-hand side " + dims(b));
  }
  return backward_solve(f, forward_solve(f, b));
}

SymmetricEigen sym_eig(const Matrix& input) {
  if (input.rows() != input.cols() || !is_symmetric(input, 1e-10)) {
    throw ContractError("sym_eig: matrix " + dims(input) + " is not symmetric");
  }
  const std::size_t n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::identity(n);

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return s;
  };
  const double total = std::max(frobenius_norm(a), std::numeric_limits<double>::min());
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (std::sqrt(off_diagonal()) <= 1e-15 * total) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= std::numeric_limits<double>::min()) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

}  // namespace ntkal
