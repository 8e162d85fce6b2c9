#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpcn/autodiff.hpp"
#include "gpcn/flops.hpp"
#include "gpcn/graph.hpp"
#include "gpcn/linalg.hpp"
#include "gpcn/rng.hpp"

namespace gpcn {

struct Parameter {
  std::string name;
  Matrix value;
  int level = 0;  // ensemble level that owns the tensor
};

// Flat, ordered store of trainable tensors. Models refer to entries by index.
class ParameterSet {
 public:
  std::size_t add(std::string name, Matrix value, int level);
  std::size_t size() const { return items_.size(); }
  Parameter& operator[](std::size_t i) { return items_.at(i); }
  const Parameter& operator[](std::size_t i) const { return items_.at(i); }
  std::span<Parameter> items() { return items_; }
  std::span<const Parameter> items() const { return items_; }
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> items_;
};

// Filter matrix and per-channel bias of one layer.
struct LayerParams {
  Matrix w;  // F_in x F_out
  Matrix b;  // 1 x F_out
  ad::Activation activation = ad::Activation::relu;
};

// g(Z X W + b).
Matrix gcn_layer(const StructureMatrix& z, const Matrix& x, const LayerParams& p);

struct GcnSpec {
  StructureMatrix z;
  std::vector<int> gcn_widths;
  std::vector<int> dense_widths;  // node-wise head; last width is 1
};

// Structure matrix seen by a GCN: a shared sparse constant, or one dense
// matrix per batch block held on the tape (DiffPool-coarsened levels).
struct StructureOperand {
  const StructureMatrix* sparse = nullptr;
  ad::Var dense;
  std::size_t n = 0;

  static StructureOperand shared(const StructureMatrix& z) { return {&z, {}, z.rows()}; }
  static StructureOperand batched(ad::Var z, std::size_t n) { return {nullptr, z, n}; }
  std::uint64_t nnz() const { return sparse ? sparse->nnz() : n * n; }
};

struct LayerIds {
  std::size_t w = 0;
  std::size_t b = 0;
  ad::Activation activation = ad::Activation::relu;
};

// Parameter wiring of one GCN: graph-convolution layers (ReLU by default)
// whose outputs are concatenated node-wise and fed to node-wise dense layers
// (sigmoid, final layer linear). Without dense layers the output is the last
// convolution's activation.
class GcnNet {
 public:
  struct Output {
    ad::Var y;
    ad::Var first_preactivation;  // Z X W_1 + b_1
  };

  static GcnNet create(ParameterSet& params, const std::string& prefix, int level,
                       std::size_t in_features, std::span<const int> gcn_widths,
                       std::span<const int> dense_widths, Rng& rng,
                       ad::Activation gcn_activation = ad::Activation::relu);

  // x stacks `blocks` samples of z.n rows each.
  Output forward(ad::Tape& tape, std::span<const ad::Var> vars, const StructureOperand& z,
                 ad::Var x, std::size_t blocks, FlopsLedger* ledger) const;

  const std::vector<LayerIds>& gcn_layers() const { return gcn_; }
  const std::vector<LayerIds>& dense_layers() const { return dense_; }
  std::vector<std::size_t> parameter_ids() const;

 private:
  std::vector<LayerIds> gcn_;
  std::vector<LayerIds> dense_;
};

// Glorot-uniform weights, zero biases.
Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// A standalone GCN with its own parameters.
struct GcnModel {
  GcnSpec spec;
  ParameterSet params;
  GcnNet net;
  std::size_t in_features = 0;
};

GcnModel make_gcn_model(GcnSpec spec, std::size_t in_features, std::uint64_t seed);

// Leaf variables for every parameter; requires_grad selects trainable ones.
std::vector<ad::Var> bind_parameters(ad::Tape& tape, const ParameterSet& params,
                                     std::span<const char> requires_grad = {});

Matrix gcn_forward(const GcnModel& model, const Matrix& x, FlopsLedger* ledger = nullptr);

// dE/dX for E = sum of outputs, via dE/dX = Z^T (dE/dA_1) W_1^T with dE/dA_1
// taken from backpropagation.
Matrix energy_input_gradient(const GcnModel& model, const Matrix& x);
// The same gradient read directly off the tape with X as a variable.
Matrix energy_input_gradient_tape(const GcnModel& model, const Matrix& x);

// Z^T G W^T for a first-layer pre-activation gradient G (one block).
Matrix first_layer_input_gradient(const StructureMatrix& z, const Matrix& grad_a1, const Matrix& w1);

}  // namespace gpcn
