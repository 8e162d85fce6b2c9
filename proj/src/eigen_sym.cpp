#include "gpcn/eigen_sym.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gpcn {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const std::size_t n = a.rows();
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  double* row_p = a.row(p).data();
  double* row_q = a.row(q).data();
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = row_p[k];
    const double aqk = row_q[k];
    row_p[k] = c * apk - s * aqk;
    row_q[k] = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenSystem eig_sym(const Matrix& m, const JacobiOptions& options) {
  if (m.rows() != m.cols()) throw DimensionError("eig_sym: matrix is not square");
  if (!is_symmetric(m, options.symmetry_tolerance))
    throw std::invalid_argument("eig_sym: matrix is not symmetric");
  const std::size_t n = m.rows();

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  const double tol = options.relative_tolerance * frobenius_norm(m);
  // Entries below this cannot keep the off-diagonal norm above tol on their own.
  const double skip = n > 0 ? tol / static_cast<double>(n) : 0.0;
  double off = off_diagonal_norm(a);
  int sweep = 0;
  while (off > tol) {
    if (sweep == options.max_sweeps)
      throw ConvergenceError("eig_sym: no convergence after " + std::to_string(sweep) +
                                 " sweeps, off-diagonal residual " + std::to_string(off),
                             off);
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        if (std::abs(a(p, q)) > skip) rotate(a, v, p, q);
    off = off_diagonal_norm(a);
    ++sweep;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });

  EigenSystem out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(arg, src))) arg = k;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src);
  }
  return out;
}

}  // namespace gpcn
