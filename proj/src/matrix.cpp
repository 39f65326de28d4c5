// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include "attnpool/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "attnpool/error.hpp"

namespace attnpool {

std::string Shape::str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw ShapeError("matrix " + Shape{rows, cols}.str() + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (shape() != other.shape()) {
    throw ShapeError("add: " + shape().str() + " vs " + other.shape().str());
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Matrix& Matrix::operator*=(double factor) {
  for (double& v : values_) v *= factor;
  return *this;
}

namespace {

void require_shape(const Matrix& out, std::size_t rows, std::size_t cols, const char* op) {
  if (out.rows() != rows || out.cols() != cols) {
    throw ShapeError(std::string(op) + ": output " + out.shape().str() + ", expected " +
                     Shape{rows, cols}.str());
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  matmul_acc(a, b, out);
  return out;
}

namespace {

// out_row[j] += sum_p coef[p] * rows[p][j] for four rows at a time, so each
// load and store of out_row feeds four multiply-adds.
void accumulate_rows(double* out_row, const double* coef, std::size_t coef_stride,
                     const double* rows, std::size_t k, std::size_t n) {
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const double c0 = coef[p * coef_stride], c1 = coef[(p + 1) * coef_stride];
    const double c2 = coef[(p + 2) * coef_stride], c3 = coef[(p + 3) * coef_stride];
    const double* r0 = rows + p * n;
    const double* r1 = r0 + n;
    const double* r2 = r1 + n;
    const double* r3 = r2 + n;
    for (std::size_t j = 0; j < n; ++j) {
      out_row[j] += c0 * r0[j] + c1 * r1[j] + c2 * r2[j] + c3 * r3[j];
    }
  }
  for (; p < k; ++p) {
    const double c = coef[p * coef_stride];
    const double* r = rows + p * n;
    for (std::size_t j = 0; j < n; ++j) out_row[j] += c * r[j];
  }
}

}  // namespace

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape().str() + " * " + b.shape().str());
  }
  require_shape(out, a.rows(), b.cols(), "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* pc = out.values().data();
  for (std::size_t i = 0; i < m; ++i) accumulate_rows(pc + i * n, pa + i * k, 1, pb, k, n);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + a.shape().str() + "^T * " + b.shape().str());
  }
  require_shape(out, a.cols(), b.cols(), "matmul_tn");
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  const double* pa = a.values().data();
  const double* pb = b.values().data();
  double* pc = out.values().data();
  for (std::size_t i = 0; i < m; ++i) accumulate_rows(pc + i * n, pa + i, m, pb, k, n);
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape().str() + " * " + b.shape().str() + "^T");
  }
  require_shape(out, a.rows(), b.rows(), "matmul_nt");
  matmul_acc(a, transpose(b), out);
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_abs_diff: " + a.shape().str() + " vs " + b.shape().str());
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace attnpool
