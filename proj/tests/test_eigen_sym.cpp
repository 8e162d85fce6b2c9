#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "gpcn/eigen_sym.hpp"
#include "support.hpp"

using namespace gpcn;

namespace {

Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix m = test::random_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

}  // namespace

TEST(EigSym, MatchesEigenSelfAdjointSolver) {
  Rng rng(11);
  for (std::size_t n : {1u, 2u, 3u, 8u, 20u}) {
    const Matrix m = random_symmetric(n, rng);
    Eigen::MatrixXd e(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) e(i, j) = m(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e);
    const EigenSystem es = eig_sym(m);
    ASSERT_EQ(es.values.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(es.values[i], solver.eigenvalues()(i), 1e-12);
  }
}

TEST(EigSym, ReconstructsAndIsOrthonormal) {
  Rng rng(12);
  const Matrix m = random_symmetric(12, rng);
  const EigenSystem es = eig_sym(m);
  EXPECT_LT(orthogonality_error(es.vectors), 1e-12);
  Matrix vl = es.vectors;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) vl(i, j) *= es.values[j];
  EXPECT_LT(max_abs_diff(matmul(vl, false, es.vectors, true), m), 1e-12);
  for (std::size_t i = 1; i < 12; ++i) EXPECT_LE(es.values[i - 1], es.values[i]);
}

TEST(EigSym, SignConventionLargestComponentNonnegative) {
  Rng rng(13);
  const EigenSystem es = eig_sym(random_symmetric(9, rng));
  for (std::size_t j = 0; j < 9; ++j) {
    double best = 0;
    for (std::size_t i = 0; i < 9; ++i)
      if (std::abs(es.vectors(i, j)) > std::abs(best)) best = es.vectors(i, j);
    EXPECT_GE(best, 0.0);
  }
}

TEST(EigSym, LaplacianSpectrumOfPath) {
  // Path on 4 nodes: eigenvalues of L = A - D are -(2 - 2 cos(pi k / 4)).
  const Graph g(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
  const EigenSystem es = eig_sym(laplacian(g).to_dense());
  const double pi = std::acos(-1.0);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(es.values[3 - k], -(2 - 2 * std::cos(pi * k / 4)), 1e-13);
}

TEST(EigSym, RejectsBadInput) {
  EXPECT_THROW(eig_sym(Matrix(2, 3)), DimensionError);
  EXPECT_THROW(eig_sym(Matrix{{1, 2}, {0, 1}}), std::invalid_argument);
  JacobiOptions o;
  o.max_sweeps = 0;
  Rng rng(14);
  EXPECT_THROW(eig_sym(random_symmetric(6, rng), o), ConvergenceError);
}
