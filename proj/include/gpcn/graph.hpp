#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "gpcn/linalg.hpp"

namespace gpcn {

struct Edge {
  std::size_t u;
  std::size_t v;
  double weight;
  friend bool operator==(const Edge&, const Edge&) = default;
};

// Weighted undirected graph without self-loops. Edges are stored once per
// unordered pair with u < v, sorted by (u, v); parallel edges given to the
// constructor are merged by summing their weights.
class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, std::vector<Edge> edges, std::string name = {});

  std::size_t node_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& name() const { return name_; }
  double weight(std::size_t u, std::size_t v) const;  // 0 if absent

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::string name_;
};

// Structure matrices are symmetric sparse matrices.
using StructureMatrix = SparseMatrix;

// Offset tube G_Tube(n_rings, k_per_turn, offset). Node id = ring * k + column.
// Longitudinal edges join (i, j)-(i+1, j), lateral edges (i, j)-(i, j+1) for
// j < k-1, and seam edges (i, k-1)-(i+offset, 0) carry seam_weight wherever
// i + offset < n_rings.
Graph make_tube(int n_rings, int k_per_turn, int offset, double seam_weight = 1.0);

// rows x cols 4-neighbour lattice, node id = row * cols + col.
Graph make_grid(int rows, int cols);

// L(G) = A(G) - diag(A(G) 1). The diagonal is always stored.
StructureMatrix laplacian(const Graph& g);

// Z^r by repeated sparse products.
StructureMatrix structure_power(const StructureMatrix& z, int r);

// Edge-list text format: first line n, then "u v w" per edge sorted by (u, v).
void write_edge_list(std::ostream& os, const Graph& g);
Graph read_edge_list(std::istream& is, std::string name = {});

}  // namespace gpcn
