#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpcn/graph.hpp"

namespace gpcn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Bad flag, config key or input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure reported after outputs were written.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "tube:n,k,p[,seam]", "grid:rows,cols", or a path to an edge-list file.
Graph parse_graph(const std::string& spec);

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpcn::cli
