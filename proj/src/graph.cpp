#include "gpcn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gpcn {

Graph::Graph(std::size_t n, std::vector<Edge> edges, std::string name)
    : n_(n), name_(std::move(name)) {
  for (Edge& e : edges) {
    if (e.u >= n || e.v >= n) throw std::invalid_argument("Graph: edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("Graph: self-loops are not allowed");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw std::invalid_argument("Graph: edge weights must be positive and finite");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  for (const Edge& e : edges) {
    if (!edges_.empty() && edges_.back().u == e.u && edges_.back().v == e.v)
      edges_.back().weight += e.weight;
    else
      edges_.push_back(e);
  }
}

double Graph::weight(std::size_t u, std::size_t v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{u, v, 0.0},
                             [](const Edge& a, const Edge& b) {
                               return a.u != b.u ? a.u < b.u : a.v < b.v;
                             });
  return (it != edges_.end() && it->u == u && it->v == v) ? it->weight : 0.0;
}

Graph make_tube(int n_rings, int k_per_turn, int offset, double seam_weight) {
  if (n_rings < 2) throw std::invalid_argument("make_tube: n_rings must be >= 2");
  if (k_per_turn < 2) throw std::invalid_argument("make_tube: k_per_turn must be >= 2");
  if (offset < 0 || offset >= n_rings)
    throw std::invalid_argument("make_tube: offset must lie in [0, n_rings)");
  if (!(seam_weight > 0.0)) throw std::invalid_argument("make_tube: seam_weight must be positive");

  const auto k = static_cast<std::size_t>(k_per_turn);
  const auto n = static_cast<std::size_t>(n_rings);
  const auto p = static_cast<std::size_t>(offset);
  auto id = [k](std::size_t ring, std::size_t col) { return ring * k + col; };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i + 1 < n) edges.push_back({id(i, j), id(i + 1, j), 1.0});
      if (j + 1 < k) edges.push_back({id(i, j), id(i, j + 1), 1.0});
    }
    if (i + p < n) edges.push_back({id(i, k - 1), id(i + p, 0), seam_weight});
  }
  std::ostringstream name;
  name << "tube(" << n_rings << "," << k_per_turn << "," << offset;
  if (seam_weight != 1.0) name << ",seam=" << seam_weight;
  name << ")";
  return Graph(n * k, std::move(edges), name.str());
}

Graph make_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("make_grid: rows and cols must be >= 1");
  const auto r = static_cast<std::size_t>(rows);
  const auto c = static_cast<std::size_t>(cols);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      if (i + 1 < r) edges.push_back({i * c + j, (i + 1) * c + j, 1.0});
      if (j + 1 < c) edges.push_back({i * c + j, i * c + j + 1, 1.0});
    }
  return Graph(r * c, std::move(edges),
               "grid(" + std::to_string(rows) + "," + std::to_string(cols) + ")");
}

StructureMatrix laplacian(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<double> degree(n, 0.0);
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(n + 2 * g.edges().size());
  for (const Edge& e : g.edges()) {
    t.push_back({e.u, e.v, e.weight});
    t.push_back({e.v, e.u, e.weight});
    degree[e.u] += e.weight;
    degree[e.v] += e.weight;
  }
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, -degree[i]});
  return SparseMatrix(n, n, std::move(t));
}

StructureMatrix structure_power(const StructureMatrix& z, int r) {
  if (r < 1) throw std::invalid_argument("structure_power: r must be >= 1");
  StructureMatrix out = z;
  for (int i = 1; i < r; ++i) out = sparse_multiply(out, z);
  return out;
}

void write_edge_list(std::ostream& os, const Graph& g) {
  os << g.node_count() << '\n';
  for (const Edge& e : g.edges()) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, e.weight);
    os << e.u << ' ' << e.v << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf))
       << '\n';
  }
}

Graph read_edge_list(std::istream& is, std::string name) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw std::runtime_error("edge list: missing node count");
  long long n = -1;
  {
    std::istringstream ls(line);
    if (!(ls >> n) || n < 0) throw std::runtime_error("edge list: invalid node count '" + line + "'");
  }
  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream ls(line);
    long long u = -1;
    long long v = -1;
    double w = 1.0;
    if (!(ls >> u >> v)) throw std::runtime_error("edge list: malformed line '" + line + "'");
    if (!(ls >> w)) w = 1.0;
    if (u < 0 || v < 0) throw std::runtime_error("edge list: negative node id in '" + line + "'");
    edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v), w});
  }
  return Graph(static_cast<std::size_t>(n), std::move(edges), std::move(name));
}

}  // namespace gpcn
