#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "gpcn/graph.hpp"
#include "gpcn/linalg.hpp"
#include "gpcn/rng.hpp"

namespace gpcn::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

// Random weighted graph; every pair is joined with probability `density`.
inline Graph random_graph(std::size_t n, Rng& rng, double density = 0.5) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.uniform() < density) edges.push_back({u, v, rng.uniform(0.5, 2.0)});
  return Graph(n, std::move(edges));
}

// Dense L = A - D straight from the edge list.
inline Matrix dense_laplacian(const Graph& g) {
  const std::size_t n = g.node_count();
  Matrix l(n, n);
  for (const auto& e : g.edges()) {
    l(e.u, e.v) += e.weight;
    l(e.v, e.u) += e.weight;
    l(e.u, e.u) -= e.weight;
    l(e.v, e.v) -= e.weight;
  }
  return l;
}

// ||P Lc - Lf P||_F^2 with dense operands.
inline double dense_objective(const Matrix& p, const Matrix& lc, const Matrix& lf) {
  const Matrix r = naive_matmul(p, lc) - naive_matmul(lf, p);
  double s = 0;
  for (double v : r.values()) s += v * v;
  return s;
}

// Calls fn(mapping) for every injection of {0..r-1} into {0..c-1}.
inline void for_each_injection(std::size_t r, std::size_t c,
                               const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> map(r);
  std::vector<char> used(c, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == r) {
      fn(map);
      return;
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      map[i] = j;
      rec(i + 1);
      used[j] = 0;
    }
  };
  rec(0);
}

inline double brute_force_assignment(const Matrix& cost) {
  double best = std::numeric_limits<double>::infinity();
  for_each_injection(cost.rows(), cost.cols(), [&](const std::vector<std::size_t>& m) {
    double s = 0;
    for (std::size_t i = 0; i < m.size(); ++i) s += cost(i, m[i]);
    best = std::min(best, s);
  });
  return best;
}

// Minimum over 0/1 matrices with orthonormal columns in the node basis.
inline double brute_force_subpermutation(const Graph& coarse, const Graph& fine) {
  const Matrix lc = dense_laplacian(coarse);
  const Matrix lf = dense_laplacian(fine);
  double best = std::numeric_limits<double>::infinity();
  for_each_injection(coarse.node_count(), fine.node_count(), [&](const std::vector<std::size_t>& m) {
    Matrix p(fine.node_count(), coarse.node_count());
    for (std::size_t i = 0; i < m.size(); ++i) p(m[i], i) = 1.0;
    best = std::min(best, dense_objective(p, lc, lf));
  });
  return best;
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central difference of f at x along every entry of m.
inline Matrix central_difference(Matrix& m, const std::function<double()>& f, double h = 1e-6) {
  Matrix g(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double keep = m.values()[i];
    m.values()[i] = keep + h;
    const double up = f();
    m.values()[i] = keep - h;
    const double down = f();
    m.values()[i] = keep;
    g.values()[i] = (up - down) / (2 * h);
  }
  return g;
}

// Largest entrywise error relative to the largest gradient magnitude.
inline double gradient_error(const Matrix& analytic, const Matrix& numeric) {
  double scale = 0, err = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    scale = std::max({scale, std::abs(analytic.values()[i]), std::abs(numeric.values()[i])});
    err = std::max(err, std::abs(analytic.values()[i] - numeric.values()[i]));
  }
  return scale == 0 ? err : err / scale;
}

// Same measure over a whole parameter vector split into tensors. Tensors whose
// true gradient vanishes (dead ReLU layers) are judged against the model scale.
struct GradientCheck {
  double err = 0, scale = 0;
  void add(const Matrix& analytic, const Matrix& numeric) {
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      scale = std::max({scale, std::abs(analytic.values()[i]), std::abs(numeric.values()[i])});
      err = std::max(err, std::abs(analytic.values()[i] - numeric.values()[i]));
    }
  }
  double value() const { return scale == 0 ? err : err / scale; }
};

}  // namespace gpcn::test
