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
#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ntkal {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  /// Rows selected by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;
  Matrix row_block(std::size_t begin, std::size_t count) const;
  std::vector<double> col(std::size_t c) const;

  /// Appends the rows of `other` (same column count).
  void append_rows(const Matrix& other);

  bool all_finite() const noexcept;
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix vstack(const Matrix& top, const Matrix& bottom);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
/// ‖a − b‖_F / max(‖b‖_F, tiny).
double relative_error(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);

bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);

/// Diagonal jitter ladder, expressed as multiples of mean(diag(a)).
struct JitterPolicy {
  std::array<double, 4> ladder{0.0, 1e-10, 1e-8, 1e-6};
};

struct CholeskyFactor {
  Matrix lower;
  double jitter_applied = 0.0;

  std::size_t dim() const noexcept { return lower.rows(); }
};

/// Factor a + jitter·I, escalating jitter through the policy ladder.
CholeskyFactor cholesky(const Matrix& a, const JitterPolicy& policy = {});

/// Solves (A + jitter·I) X = b.
Matrix chol_solve(const CholeskyFactor& f, const Matrix& b);
/// Solves lower · Y = b.
Matrix forward_solve(const CholeskyFactor& f, const Matrix& b);
/// Solves lowerᵀ · X = b.
Matrix backward_solve(const CholeskyFactor& f, const Matrix& b);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // columns
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen sym_eig(const Matrix& a);

}  // namespace ntkal
