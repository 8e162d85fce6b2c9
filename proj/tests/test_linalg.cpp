#include <gtest/gtest.h>

#include "gpcn/linalg.hpp"
#include "support.hpp"

using namespace gpcn;
using gpcn::test::naive_matmul;
using gpcn::test::random_matrix;

TEST(Matrix, InitializerListAndIdentity) {
  const Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 2), 6.0);
  const Matrix i = Matrix::identity(3);
  EXPECT_EQ(i(0, 0) + i(1, 1) + i(2, 2), 3.0);
  EXPECT_EQ(sum(i), 3.0);
  EXPECT_THROW((Matrix{{1, 2}, {3}}), DimensionError);
}

TEST(Matrix, MatmulMatchesNaiveForAllTransposes) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), k = 1 + rng.below(9), n = 1 + rng.below(9);
    const Matrix a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
    const Matrix ref = naive_matmul(a, b);
    EXPECT_LT(max_abs_diff(matmul(a, b), ref), 1e-13);
    EXPECT_LT(max_abs_diff(matmul(transpose(a), true, b, false), ref), 1e-13);
    EXPECT_LT(max_abs_diff(matmul(a, false, transpose(b), true), ref), 1e-13);
    EXPECT_LT(max_abs_diff(matmul(transpose(a), true, transpose(b), true), ref), 1e-13);
  }
}

TEST(Matrix, GemmAccumulates) {
  Rng rng(4);
  const Matrix a = random_matrix(3, 4, rng), b = random_matrix(4, 2, rng);
  Matrix c = random_matrix(3, 2, rng);
  const Matrix c0 = c;
  gemm(false, false, 3, 2, 4, 2.0, a.data(), b.data(), 0.5, c.data());
  const Matrix expect = 2.0 * naive_matmul(a, b) + 0.5 * c0;
  EXPECT_LT(max_abs_diff(c, expect), 1e-13);
}

TEST(Matrix, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
  Matrix a(2, 2);
  EXPECT_THROW(a += Matrix(2, 3), DimensionError);
}

TEST(Matrix, QrFactorIsOrthonormalAndSpansInput) {
  Rng rng(5);
  const Matrix a = random_matrix(7, 4, rng);
  const Matrix q = qr_orthonormal_factor(a);
  EXPECT_LT(orthogonality_error(q), 1e-13);
  // R = Q^T A must be upper triangular with positive diagonal and reproduce A.
  const Matrix r = matmul(q, true, a, false);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GT(r(i, i), 0.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_NEAR(r(i, j), 0.0, 1e-13);
  }
  EXPECT_LT(max_abs_diff(matmul(q, r), a), 1e-13);
}

TEST(Matrix, OrthogonalityErrorOfKnownMatrix) {
  const Matrix p{{2, 0}, {0, 1}, {0, 0}};
  EXPECT_DOUBLE_EQ(orthogonality_error(p), 3.0);
}

TEST(Sparse, TripletsAreSortedAndDuplicatesSummed) {
  const SparseMatrix s(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}});
  EXPECT_EQ(s.nnz(), 3u);
  EXPECT_EQ(s.at(1, 2), 5.0);
  EXPECT_EQ(s.at(0, 0), 0.0);
  const auto ci = s.col_index();
  EXPECT_EQ(ci[1], 0u);
  EXPECT_EQ(ci[2], 2u);
  EXPECT_THROW(SparseMatrix(2, 2, {{2, 0, 1.0}}), std::exception);
}

TEST(Sparse, SpmmMatchesDensePerBlock) {
  Rng rng(6);
  Matrix zd = random_matrix(5, 5, rng);
  for (double& v : zd.values())
    if (rng.uniform() < 0.5) v = 0.0;
  const SparseMatrix z = SparseMatrix::from_dense(zd);
  const Matrix x = random_matrix(15, 3, rng);
  const Matrix out = spmm(z, x, 3);
  for (std::size_t b = 0; b < 3; ++b) {
    Matrix xb(5, 3);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) xb(i, j) = x(5 * b + i, j);
    const Matrix ref = naive_matmul(zd, xb);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out(5 * b + i, j), ref(i, j), 1e-14);
  }
  Matrix t(5, 3);
  spmm_raw(z, true, x.data(), 3, 1, t.data(), false);
  EXPECT_LT(max_abs_diff(t, naive_matmul(transpose(zd), Matrix(5, 3, std::vector<double>(x.data(), x.data() + 15)))),
            1e-14);
}

TEST(Sparse, SparseProductMatchesDense) {
  Rng rng(7);
  Matrix ad = random_matrix(4, 6, rng), bd = random_matrix(6, 3, rng);
  for (double& v : ad.values())
    if (rng.uniform() < 0.4) v = 0.0;
  const SparseMatrix c = sparse_multiply(SparseMatrix::from_dense(ad), SparseMatrix::from_dense(bd));
  EXPECT_LT(max_abs_diff(c.to_dense(), naive_matmul(ad, bd)), 1e-14);
}
