#include "gpcn/gdd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gpcn/parallel.hpp"

namespace gpcn {

namespace {

// P * L for dense P and sparse L.
Matrix times_sparse(const Matrix& p, const StructureMatrix& l) {
  Matrix out(p.rows(), l.cols());
  const auto rp = l.row_ptr();
  const auto ci = l.col_index();
  const auto lv = l.values();
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto pr = p.row(i);
    auto orow = out.row(i);
    for (std::size_t k = 0; k < l.rows(); ++k) {
      const double pik = pr[k];
      if (pik == 0.0) continue;
      for (std::size_t q = rp[k]; q < rp[k + 1]; ++q) orow[ci[q]] += pik * lv[q];
    }
  }
  return out;
}

Matrix residual(const Matrix& p, const StructureMatrix& l_coarse, const StructureMatrix& l_fine,
                double alpha) {
  Matrix r = times_sparse(p, l_coarse);
  r *= 1.0 / alpha;
  Matrix lp = spmm(l_fine, p);
  for (std::size_t i = 0; i < r.size(); ++i) r.values()[i] -= alpha * lp.values()[i];
  return r;
}

double squared_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

void check_shapes(const Matrix& p, const StructureMatrix& l_coarse, const StructureMatrix& l_fine) {
  if (p.rows() != l_fine.rows() || p.cols() != l_coarse.rows())
    throw DimensionError("lgdd: P is " + p.shape_string() + " but graphs have " +
                         std::to_string(l_fine.rows()) + " (fine) and " +
                         std::to_string(l_coarse.rows()) + " (coarse) nodes");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

}  // namespace

double Prolongation::distance() const { return std::sqrt(std::max(objective, 0.0)); }

double assignment_cost(double lambda_coarse, double lambda_fine, double alpha) {
  check_alpha(alpha);
  const double d = lambda_coarse / alpha - alpha * lambda_fine;
  return d * d;
}

Matrix spectral_cost(std::span<const double> coarse, std::span<const double> fine, double alpha) {
  Matrix c(coarse.size(), fine.size());
  for (std::size_t j = 0; j < coarse.size(); ++j)
    for (std::size_t l = 0; l < fine.size(); ++l) c(j, l) = assignment_cost(coarse[j], fine[l], alpha);
  return c;
}

Matrix warm_start(const EigenSystem& coarse, const EigenSystem& fine, const Assignment& a) {
  const std::size_t nc = coarse.values.size();
  const std::size_t nf = fine.values.size();
  if (coarse.vectors.rows() != nc || fine.vectors.rows() != nf || a.pairs.size() != nc)
    throw DimensionError("warm_start: assignment does not match the two spectra");
  // U_fine S picks fine eigenvectors; (U_fine S) U_coarse^T.
  Matrix selected(nf, nc);
  std::vector<char> used(nf, 0);
  std::vector<char> covered(nc, 0);
  for (const auto& [j, l] : a.pairs) {
    if (j >= nc || l >= nf || used[l] || covered[j])
      throw DimensionError("warm_start: assignment is not an injection over the spectra");
    used[l] = 1;
    covered[j] = 1;
    for (std::size_t r = 0; r < nf; ++r) selected(r, j) = fine.vectors(r, l);
  }
  return matmul(selected, false, coarse.vectors, true);
}

double lgdd_objective(const Matrix& p, const StructureMatrix& l_coarse,
                      const StructureMatrix& l_fine, double alpha) {
  check_alpha(alpha);
  check_shapes(p, l_coarse, l_fine);
  return squared_norm(residual(p, l_coarse, l_fine, alpha));
}

Matrix lgdd_gradient(const Matrix& p, const StructureMatrix& l_coarse,
                     const StructureMatrix& l_fine, double alpha) {
  check_alpha(alpha);
  check_shapes(p, l_coarse, l_fine);
  // f = ||R||^2 with R = P L1 / a - a L2 P  =>  df/dP = 2 (R L1^T / a - a L2^T R).
  // Both Laplacians are symmetric.
  const Matrix r = residual(p, l_coarse, l_fine, alpha);
  Matrix g = times_sparse(r, l_coarse);
  g *= 2.0 / alpha;
  Matrix lr = spmm(l_fine, r);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] -= 2.0 * alpha * lr.values()[i];
  return g;
}

Prolongation refine_orthogonal(const Matrix& p0, const StructureMatrix& l_coarse,
                               const StructureMatrix& l_fine, double alpha,
                               const RefineOptions& options) {
  check_alpha(alpha);
  check_shapes(p0, l_coarse, l_fine);
  const double start_error = orthogonality_error(p0);
  if (!(start_error < options.start_orthogonality_tolerance))
    throw std::invalid_argument("refine_orthogonal: starting point is not column-orthonormal "
                                "(||P^T P - I||_F = " + std::to_string(start_error) + ")");

  Prolongation out;
  out.alpha = alpha;
  out.p = p0;
  out.objective = lgdd_objective(p0, l_coarse, l_fine, alpha);
  out.initial_objective = out.objective;
  out.objective_trace.push_back(out.objective);
  out.max_orthogonality_error = start_error;

  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix g = lgdd_gradient(out.p, l_coarse, l_fine, alpha);
    Matrix ptg = matmul(out.p, true, g, false);
    Matrix sym = ptg;
    for (std::size_t i = 0; i < sym.rows(); ++i)
      for (std::size_t j = 0; j < sym.cols(); ++j) sym(i, j) = 0.5 * (ptg(i, j) + ptg(j, i));
    Matrix direction = g - matmul(out.p, sym);
    const double grad_sq = squared_norm(direction);
    out.final_gradient_norm = std::sqrt(grad_sq);
    if (out.final_gradient_norm < options.gradient_tolerance) break;

    double step = options.initial_step;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
      Matrix candidate = out.p;
      for (std::size_t i = 0; i < candidate.size(); ++i)
        candidate.values()[i] -= step * direction.values()[i];
      candidate = qr_orthonormal_factor(candidate);
      const double f = lgdd_objective(candidate, l_coarse, l_fine, alpha);
      if (f <= out.objective - options.armijo * step * grad_sq) {
        out.p = std::move(candidate);
        out.objective = f;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no descent representable at this precision
    ++out.iterations;
    out.objective_trace.push_back(out.objective);
    out.max_orthogonality_error = std::max(out.max_orthogonality_error, orthogonality_error(out.p));
  }
  return out;
}

GddResult gdd_detailed(const StructureMatrix& l_coarse, const EigenSystem& coarse_eig,
                       const StructureMatrix& l_fine, const EigenSystem& fine_eig, double alpha,
                       const RefineOptions& options) {
  check_alpha(alpha);
  if (l_coarse.rows() > l_fine.rows())
    throw std::invalid_argument("gdd: coarse graph has more nodes (" +
                                std::to_string(l_coarse.rows()) + ") than fine graph (" +
                                std::to_string(l_fine.rows()) + ")");
  GddResult out;
  const Matrix cost = spectral_cost(coarse_eig.values, fine_eig.values, alpha);
  out.assignment = rlap_solve(cost);
  const Matrix p0 = warm_start(coarse_eig, fine_eig, out.assignment);
  out.warm_start_objective = lgdd_objective(p0, l_coarse, l_fine, alpha);
  out.prolongation = refine_orthogonal(p0, l_coarse, l_fine, alpha, options);
  return out;
}

GddResult gdd_detailed(const Graph& coarse, const Graph& fine, double alpha,
                       const RefineOptions& options) {
  check_alpha(alpha);
  if (coarse.node_count() > fine.node_count())
    throw std::invalid_argument("gdd: coarse graph has more nodes (" +
                                std::to_string(coarse.node_count()) + ") than fine graph (" +
                                std::to_string(fine.node_count()) + ")");
  const StructureMatrix lc = laplacian(coarse);
  const StructureMatrix lf = laplacian(fine);
  const EigenSystem ec = eig_sym(lc.to_dense());
  const EigenSystem ef = eig_sym(lf.to_dense());
  return gdd_detailed(lc, ec, lf, ef, alpha, options);
}

Prolongation gdd(const Graph& coarse, const Graph& fine, double alpha) {
  return gdd_detailed(coarse, fine, alpha).prolongation;
}

std::vector<CoarseSearchRow> coarse_search(const Graph& fine, int n_rings, std::span<const int> ks,
                                           std::span<const int> ps,
                                           std::span<const double> seam_weights, int threads) {
  std::vector<CoarseSearchRow> rows;
  for (int k : ks)
    for (int p : ps)
      for (double w : seam_weights) rows.push_back({k, p, w, 0.0});
  // Validate every candidate before any expensive work.
  for (const auto& r : rows) (void)make_tube(n_rings, r.k, r.p, r.seam_weight);

  const StructureMatrix lf = laplacian(fine);
  const EigenSystem ef = eig_sym(lf.to_dense());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const Graph candidate = make_tube(n_rings, rows[i].k, rows[i].p, rows[i].seam_weight);
    const StructureMatrix lc = laplacian(candidate);
    const EigenSystem ec = eig_sym(lc.to_dense());
    rows[i].distance = gdd_detailed(lc, ec, lf, ef, 1.0).prolongation.distance();
  });
  return rows;
}

}  // namespace gpcn
