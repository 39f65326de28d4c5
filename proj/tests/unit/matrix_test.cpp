// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "attnpool/error.hpp"
#include "attnpool/matrix.hpp"
#include "oracles.hpp"

namespace attnpool {
namespace {

Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t p = 0; p < a.cols(); ++p) out(i, j) += a(i, p) * b(p, j);
  return out;
}

TEST(MatrixTest, ProductsMatchTripleLoop) {
  for (std::size_t k : {1u, 3u, 4u, 7u, 9u}) {
    const Matrix a = oracle::random_matrix(5, k, 1 + k);
    const Matrix b = oracle::random_matrix(k, 6, 2 + k);
    EXPECT_LT(max_abs_diff(matmul(a, b), naive_product(a, b)), 1e-12);

    const Matrix c = oracle::random_matrix(k, 6, 3 + k);
    Matrix tn(5, 6);
    matmul_tn_acc(transpose(a), c, tn);
    EXPECT_LT(max_abs_diff(tn, naive_product(a, c)), 1e-12);

    Matrix nt(5, 4);
    const Matrix d = oracle::random_matrix(4, k, 4 + k);
    matmul_nt_acc(a, d, nt);
    EXPECT_LT(max_abs_diff(nt, naive_product(a, transpose(d))), 1e-12);
  }
}

TEST(MatrixTest, AccumulatingProductsAdd) {
  const Matrix a = oracle::random_matrix(2, 3, 5);
  const Matrix b = oracle::random_matrix(3, 2, 6);
  Matrix out(2, 2, 1.0);
  matmul_acc(a, b, out);
  Matrix expected = naive_product(a, b);
  for (double& v : expected.values()) v += 1.0;
  EXPECT_LT(max_abs_diff(out, expected), 1e-12);
}

TEST(MatrixTest, ShapeMismatchNamesBothShapes) {
  const Matrix a(2, 3), b(4, 5);
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
    EXPECT_NE(what.find("4x5"), std::string::npos) << what;
  }
}

TEST(MatrixTest, Builders) {
  const Matrix id = Matrix::identity(3);
  EXPECT_EQ(id(1, 1), 1.0);
  EXPECT_EQ(id(0, 2), 0.0);
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(m(1, 0), 3.0);
  EXPECT_EQ(transpose(m)(0, 1), 3.0);
  EXPECT_EQ(matmul(m, Matrix::identity(2)), m);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), ShapeError);
}

}  // namespace
}  // namespace attnpool
