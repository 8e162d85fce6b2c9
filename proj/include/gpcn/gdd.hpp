#pragma once

#include <span>
#include <vector>

#include "gpcn/eigen_sym.hpp"
#include "gpcn/graph.hpp"
#include "gpcn/linalg.hpp"
#include "gpcn/rlap.hpp"

namespace gpcn {

// Inter-scale operator from a coarse graph (columns) to a fine graph (rows).
// `objective` is the squared residual ||(1/alpha) P L_coarse - alpha L_fine P||_F^2;
// distance() is its square root, the linear graph diffusion distance.
struct Prolongation {
  Matrix p;
  double alpha = 1.0;
  double objective = 0.0;

  // Refinement diagnostics.
  double initial_objective = 0.0;
  std::vector<double> objective_trace;  // one entry per accepted iterate, starting at p0
  double max_orthogonality_error = 0.0;
  double final_gradient_norm = 0.0;
  int iterations = 0;

  double distance() const;
};

// c_alpha(l1, l2) = (l1 / alpha - alpha * l2)^2.
double assignment_cost(double lambda_coarse, double lambda_fine, double alpha);

// Cost matrix over (coarse eigen-index, fine eigen-index).
Matrix spectral_cost(std::span<const double> coarse, std::span<const double> fine, double alpha);

// U_fine * S * U_coarse^T where S[l, j] = 1 iff (j, l) is assigned.
Matrix warm_start(const EigenSystem& coarse, const EigenSystem& fine, const Assignment& a);

double lgdd_objective(const Matrix& p, const StructureMatrix& l_coarse,
                      const StructureMatrix& l_fine, double alpha);
// Euclidean gradient of lgdd_objective with respect to p.
Matrix lgdd_gradient(const Matrix& p, const StructureMatrix& l_coarse,
                     const StructureMatrix& l_fine, double alpha);

struct RefineOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-8;
  double initial_step = 1.0;
  double armijo = 1e-4;
  int max_halvings = 60;
  double start_orthogonality_tolerance = 1e-6;
};

// Riemannian gradient descent over matrices with orthonormal columns:
// direction G - P sym(P^T G), QR retraction, Armijo backtracking by halving.
Prolongation refine_orthogonal(const Matrix& p0, const StructureMatrix& l_coarse,
                               const StructureMatrix& l_fine, double alpha,
                               const RefineOptions& options = {});

struct GddResult {
  Prolongation prolongation;
  Assignment assignment;
  double warm_start_objective = 0.0;
};

// Full pipeline: eigendecompose both Laplacians, solve the spectral RLAP, warm
// start and refine.
GddResult gdd_detailed(const Graph& coarse, const Graph& fine, double alpha = 1.0,
                       const RefineOptions& options = {});
GddResult gdd_detailed(const StructureMatrix& l_coarse, const EigenSystem& coarse_eig,
                       const StructureMatrix& l_fine, const EigenSystem& fine_eig, double alpha,
                       const RefineOptions& options = {});
Prolongation gdd(const Graph& coarse, const Graph& fine, double alpha = 1.0);

struct CoarseSearchRow {
  int k = 0;
  int p = 0;
  double seam_weight = 1.0;
  double distance = 0.0;
};

// One gdd evaluation of Tube(n_rings, k, p, seam) against `fine` per candidate,
// rows ordered by (k, p, seam_weight) as given.
std::vector<CoarseSearchRow> coarse_search(const Graph& fine, int n_rings, std::span<const int> ks,
                                           std::span<const int> ps,
                                           std::span<const double> seam_weights, int threads = 1);

}  // namespace gpcn
