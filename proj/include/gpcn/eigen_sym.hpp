#pragma once

#include <stdexcept>
#include <vector>

#include "gpcn/linalg.hpp"

namespace gpcn {

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// m = vectors * diag(values) * vectors^T, eigenvalues ascending.
struct EigenSystem {
  Matrix vectors;  // columns are eigenvectors
  std::vector<double> values;
};

struct JacobiOptions {
  double relative_tolerance = 1e-12;  // off-diagonal norm relative to ||m||_F
  int max_sweeps = 100;
  double symmetry_tolerance = 1e-9;
};

// Cyclic Jacobi eigensolver for symmetric matrices. Each eigenvector is
// normalised so that its largest-magnitude component (first on ties) is
// nonnegative, which makes the output a deterministic function of the input.
EigenSystem eig_sym(const Matrix& m, const JacobiOptions& options = {});

}  // namespace gpcn
