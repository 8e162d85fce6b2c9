#include "gpcn/gcn.hpp"

#include <cmath>
#include <stdexcept>

namespace gpcn {

std::size_t ParameterSet::add(std::string name, Matrix value, int level) {
  items_.push_back({std::move(name), std::move(value), level});
  return items_.size() - 1;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.value.size();
  return n;
}

Matrix gcn_layer(const StructureMatrix& z, const Matrix& x, const LayerParams& p) {
  if (z.cols() != x.rows())
    throw DimensionError("gcn_layer: Z is " + std::to_string(z.rows()) + "x" +
                         std::to_string(z.cols()) + " but X is " + x.shape_string());
  if (p.w.rows() != x.cols() || p.b.rows() != 1 || p.b.cols() != p.w.cols())
    throw DimensionError("gcn_layer: W " + p.w.shape_string() + " / b " + p.b.shape_string() +
                         " do not fit X " + x.shape_string());
  Matrix a = matmul(spmm(z, x), p.w);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) a(i, j) += p.b(0, j);
  return ad::apply_activation(p.activation, std::move(a));
}

Matrix glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (double& v : w.values()) v = rng.uniform(-limit, limit);
  return w;
}

GcnNet GcnNet::create(ParameterSet& params, const std::string& prefix, int level,
                      std::size_t in_features, std::span<const int> gcn_widths,
                      std::span<const int> dense_widths, Rng& rng, ad::Activation gcn_activation) {
  if (gcn_widths.empty()) throw std::invalid_argument("GcnNet: at least one GCN layer is required");
  GcnNet net;
  std::size_t fan_in = in_features;
  std::size_t concat = 0;
  for (std::size_t l = 0; l < gcn_widths.size(); ++l) {
    if (gcn_widths[l] <= 0) throw std::invalid_argument("GcnNet: widths must be positive");
    const auto c = static_cast<std::size_t>(gcn_widths[l]);
    const std::string tag = prefix + "gcn" + std::to_string(l);
    LayerIds ids;
    ids.w = params.add(tag + ".w", glorot_uniform(fan_in, c, rng), level);
    ids.b = params.add(tag + ".b", Matrix(1, c), level);
    ids.activation = gcn_activation;
    net.gcn_.push_back(ids);
    fan_in = c;
    concat += c;
  }
  fan_in = concat;
  for (std::size_t l = 0; l < dense_widths.size(); ++l) {
    if (dense_widths[l] <= 0) throw std::invalid_argument("GcnNet: widths must be positive");
    const auto c = static_cast<std::size_t>(dense_widths[l]);
    const std::string tag = prefix + "dense" + std::to_string(l);
    LayerIds ids;
    ids.w = params.add(tag + ".w", glorot_uniform(fan_in, c, rng), level);
    ids.b = params.add(tag + ".b", Matrix(1, c), level);
    ids.activation = l + 1 == dense_widths.size() ? ad::Activation::linear : ad::Activation::sigmoid;
    net.dense_.push_back(ids);
    fan_in = c;
  }
  return net;
}

GcnNet::Output GcnNet::forward(ad::Tape& tape, std::span<const ad::Var> vars,
                               const StructureOperand& z, ad::Var x, std::size_t blocks,
                               FlopsLedger* ledger) const {
  const Matrix& xv = tape.value(x);
  if (xv.rows() != blocks * z.n)
    throw DimensionError("gcn forward: input " + xv.shape_string() + " is not " +
                         std::to_string(blocks) + " blocks of " + std::to_string(z.n) + " nodes");
  Output out;
  std::vector<ad::Var> layer_outputs;
  ad::Var h = x;
  for (const LayerIds& l : gcn_) {
    const std::size_t f = tape.value(h).cols();
    const std::size_t c = tape.value(vars[l.w]).cols();
    ad::Var zx = z.sparse ? ad::spmm(tape, *z.sparse, h, blocks)
                          : ad::block_matmul(tape, z.dense, true, false, h, blocks);
    ad::Var a = ad::add_row_bias(tape, ad::matmul(tape, zx, vars[l.w]), vars[l.b]);
    if (!out.first_preactivation.valid()) out.first_preactivation = a;
    h = ad::activate(tape, a, l.activation);
    layer_outputs.push_back(h);
    if (ledger) ledger->add(FlopsCategory::gcn_layer, blocks * flops_gcn_layer(z.n, f, c, z.nnz()));
  }
  if (dense_.empty()) {
    out.y = h;
    return out;
  }
  ad::Var d = layer_outputs.size() == 1 ? layer_outputs.front()
                                        : ad::concat_cols(tape, layer_outputs);
  for (const LayerIds& l : dense_) {
    const std::size_t f = tape.value(d).cols();
    const std::size_t c = tape.value(vars[l.w]).cols();
    d = ad::activate(tape, ad::add_row_bias(tape, ad::matmul(tape, d, vars[l.w]), vars[l.b]),
                     l.activation);
    if (ledger) ledger->add(FlopsCategory::dense, blocks * flops_dense(z.n, f, c));
  }
  out.y = d;
  return out;
}

std::vector<std::size_t> GcnNet::parameter_ids() const {
  std::vector<std::size_t> ids;
  for (const auto& l : gcn_) {
    ids.push_back(l.w);
    ids.push_back(l.b);
  }
  for (const auto& l : dense_) {
    ids.push_back(l.w);
    ids.push_back(l.b);
  }
  return ids;
}

GcnModel make_gcn_model(GcnSpec spec, std::size_t in_features, std::uint64_t seed) {
  if (!spec.dense_widths.empty() && spec.dense_widths.back() != 1)
    throw std::invalid_argument("make_gcn_model: dense head must end in width 1");
  GcnModel m;
  m.spec = std::move(spec);
  m.in_features = in_features;
  Rng rng(seed);
  m.net = GcnNet::create(m.params, "", 0, in_features, m.spec.gcn_widths, m.spec.dense_widths, rng);
  return m;
}

std::vector<ad::Var> bind_parameters(ad::Tape& tape, const ParameterSet& params,
                                     std::span<const char> requires_grad) {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const bool rg = requires_grad.empty() || requires_grad[i];
    vars.push_back(rg ? tape.variable(params[i].value) : tape.constant(params[i].value));
  }
  return vars;
}

Matrix gcn_forward(const GcnModel& model, const Matrix& x, FlopsLedger* ledger) {
  ad::Tape tape;
  const std::vector<char> none(model.params.size(), 0);
  auto vars = bind_parameters(tape, model.params, none);
  ad::Var xv = tape.constant(x);
  return tape.value(
      model.net.forward(tape, vars, StructureOperand::shared(model.spec.z), xv, 1, ledger).y);
}

Matrix first_layer_input_gradient(const StructureMatrix& z, const Matrix& grad_a1, const Matrix& w1) {
  Matrix zt_g(z.cols(), grad_a1.cols());
  spmm_raw(z, true, grad_a1.data(), grad_a1.cols(), 1, zt_g.data(), false);
  return matmul(zt_g, false, w1, true);
}

Matrix energy_input_gradient(const GcnModel& model, const Matrix& x) {
  ad::Tape tape;
  auto vars = bind_parameters(tape, model.params);
  ad::Var xv = tape.constant(x);
  const auto out = model.net.forward(tape, vars, StructureOperand::shared(model.spec.z), xv, 1, nullptr);
  tape.backward(ad::sum_all(tape, out.y));
  const Matrix& w1 = model.params[model.net.gcn_layers().front().w].value;
  return first_layer_input_gradient(model.spec.z, tape.grad(out.first_preactivation), w1);
}

Matrix energy_input_gradient_tape(const GcnModel& model, const Matrix& x) {
  ad::Tape tape;
  const std::vector<char> none(model.params.size(), 0);
  auto vars = bind_parameters(tape, model.params, none);
  ad::Var xv = tape.variable(x);
  const auto out = model.net.forward(tape, vars, StructureOperand::shared(model.spec.z), xv, 1, nullptr);
  tape.backward(ad::sum_all(tape, out.y));
  return tape.grad(xv);
}

}  // namespace gpcn
