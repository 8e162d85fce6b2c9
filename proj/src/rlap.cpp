#include "gpcn/rlap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpcn {

Assignment rlap_solve(const Matrix& cost) {
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  if (rows > cols)
    throw std::invalid_argument("rlap_solve: more rows (" + std::to_string(rows) +
                                ") than columns (" + std::to_string(cols) + ")");
  for (double v : cost.values())
    if (!std::isfinite(v)) throw std::invalid_argument("rlap_solve: non-finite cost");

  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual root of each augmenting search.
  std::vector<double> u(rows + 1, 0.0);
  std::vector<double> v(cols + 1, 0.0);
  std::vector<std::size_t> row_of_col(cols + 1, 0);
  std::vector<std::size_t> way(cols + 1, 0);
  std::vector<double> min_reduced(cols + 1);
  std::vector<char> used(cols + 1);

  for (std::size_t r = 1; r <= rows; ++r) {
    row_of_col[0] = r;
    std::size_t col0 = 0;
    std::fill(min_reduced.begin(), min_reduced.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t row0 = row_of_col[col0];
      double delta = inf;
      std::size_t next = 0;
      for (std::size_t c = 1; c <= cols; ++c) {
        if (used[c]) continue;
        const double reduced = cost(row0 - 1, c - 1) - u[row0] - v[c];
        if (reduced < min_reduced[c]) {
          min_reduced[c] = reduced;
          way[c] = col0;
        }
        if (min_reduced[c] < delta) {
          delta = min_reduced[c];
          next = c;
        }
      }
      for (std::size_t c = 0; c <= cols; ++c) {
        if (used[c]) {
          u[row_of_col[c]] += delta;
          v[c] -= delta;
        } else {
          min_reduced[c] -= delta;
        }
      }
      col0 = next;
    } while (row_of_col[col0] != 0);
    do {
      const std::size_t prev = way[col0];
      row_of_col[col0] = row_of_col[prev];
      col0 = prev;
    } while (col0 != 0);
  }

  Assignment out;
  std::vector<std::size_t> col_of_row(rows, 0);
  for (std::size_t c = 1; c <= cols; ++c)
    if (row_of_col[c] != 0) col_of_row[row_of_col[c] - 1] = c - 1;
  out.pairs.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) out.pairs.emplace_back(r, col_of_row[r]);
  out.total_cost = assignment_total(cost, out);
  return out;
}

double assignment_total(const Matrix& cost, const Assignment& a) {
  double s = 0.0;
  for (const auto& [r, c] : a.pairs) s += cost(r, c);
  return s;
}

}  // namespace gpcn
