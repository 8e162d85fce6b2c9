#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpcn/autodiff.hpp"
#include "gpcn/flops.hpp"
#include "gpcn/gcn.hpp"
#include "gpcn/graph.hpp"
#include "gpcn/linalg.hpp"

namespace gpcn {

enum class ModelKind { gpcn, plain_ensemble, ngcn, diffpool };

const char* to_string(ModelKind k);

// Levels are ordered fine to coarse. prolongations[i] maps level i+1 onto
// level i (n_i x n_{i+1}); only gpcn models carry them. For diffpool models
// levels past the first have no stored structure matrix and pooled_nodes[i]
// gives their node count.
struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::gpcn;
  std::vector<GcnSpec> levels;
  std::vector<Matrix> prolongations;
  bool adaptive = false;
  std::vector<int> radii;
  std::vector<std::size_t> pooled_nodes;

  std::size_t level_count() const { return levels.size(); }
  std::size_t fine_nodes() const { return levels.at(0).z.rows(); }
};

// P_{1,2} P_{2,3} ... ; an empty chain is the n x n identity.
Matrix compose_prolongations(std::span<const Matrix> ps, std::size_t n = 0);

// Graphs of a multiscale hierarchy with the optimized operators between
// consecutive levels.
struct Hierarchy {
  std::vector<Graph> graphs;
  std::vector<StructureMatrix> laplacians;
  std::vector<Matrix> prolongations;
  std::vector<double> distances;
};

// Without optimization the operators are zero placeholders of the right
// shape (enough for cost accounting).
Hierarchy make_hierarchy(std::vector<Graph> fine_to_coarse, int threads = 1, bool optimize = true);
// Tube(R,13,3) / Tube(R/2,13,1) / Tube(R/2,3,0).
Hierarchy microtubule_hierarchy(int fine_rings, int threads = 1, bool optimize = true);

const std::vector<std::string>& table_model_names();
// Throws std::invalid_argument listing the valid names on an unknown name.
ModelSpec build_from_table(const std::string& name, const Hierarchy& h);

class Model {
 public:
  struct Pass {
    ad::Var output;
    std::vector<ad::Var> level_outputs;          // each lifted to the fine level
    std::vector<ad::Var> first_preactivations;   // per level, invalid when masked
    std::vector<ad::Var> lifts;                  // P_{1,i}; invalid for identity
  };

  Model() = default;
  Model(ModelSpec spec, std::size_t in_features, std::uint64_t seed);

  const ModelSpec& spec() const { return spec_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  std::size_t in_features() const { return in_features_; }
  std::size_t level_count() const { return spec_.levels.size(); }
  std::size_t level_nodes(std::size_t level) const;
  const GcnNet& level_net(std::size_t level) const { return nets_.at(level); }
  const std::vector<std::size_t>& prolongation_ids() const { return p_ids_; }
  const GcnNet& pool_net(std::size_t level) const { return pool_nets_.at(level); }

  // level_mask empty means all levels.
  Pass forward(ad::Tape& tape, std::span<const ad::Var> vars, ad::Var x, std::size_t blocks,
               std::span<const char> level_mask, FlopsLedger* ledger) const;
  Matrix predict(const Matrix& x, std::size_t blocks = 1, std::span<const char> level_mask = {},
                 FlopsLedger* ledger = nullptr) const;

  // Parameters owned by the selected levels.
  std::vector<char> parameter_mask(std::span<const char> levels) const;
  // Current P_{1,level} (non-diffpool models).
  Matrix composed_prolongation(std::size_t level) const;

 private:
  ModelSpec spec_;
  ParameterSet params_;
  std::size_t in_features_ = 0;
  std::vector<GcnNet> nets_;
  std::vector<GcnNet> pool_nets_;     // diffpool: index i pools level i-1 into i
  std::vector<std::size_t> p_ids_;    // adaptive: parameter holding P_{i,i+1}
  std::vector<Matrix> composed_;      // fixed gpcn: P_{1,i}
};

Matrix gpcn_forward(const Model& model, const Matrix& x, std::span<const char> level_mask = {});
Matrix ngcn_forward(const Model& model, const Matrix& x);

struct DiffPoolResult {
  Matrix z;
  Matrix x;
  Matrix s;
};
// S = row_softmax(pool GCN(z, x)), returns (S^T Z S, S^T X, S).
DiffPoolResult diffpool_coarsen(const GcnNet& pool, const ParameterSet& params,
                                const StructureMatrix& z, const Matrix& x);

// dE/dX = sum_i P_{1,i} Z_i^T (dE/dA_1^(i)) W_1^(i)T for E = sum of outputs.
Matrix ensemble_input_gradient(const Model& model, const Matrix& x);
Matrix ensemble_input_gradient_tape(const Model& model, const Matrix& x);

}  // namespace gpcn
