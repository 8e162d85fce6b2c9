#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gpcn/linalg.hpp"

namespace gpcn {

// Injective matching of every row (coarse eigen-index) to a distinct column
// (fine eigen-index).
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, column), by row
  double total_cost = 0.0;                                 // summed in row order
};

// Minimum-cost rectangular linear assignment for an r x c cost matrix with
// r <= c, by shortest augmenting paths with dual potentials. Among equal
// reduced costs the lowest column index is taken.
Assignment rlap_solve(const Matrix& cost);

// Sum of cost(row, col) over the pairs, in row order.
double assignment_total(const Matrix& cost, const Assignment& a);

}  // namespace gpcn
