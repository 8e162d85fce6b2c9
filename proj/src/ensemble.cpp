#include "gpcn/ensemble.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "gpcn/gdd.hpp"
#include "gpcn/parallel.hpp"

namespace gpcn {

namespace {

const std::vector<int> kHead = {256, 32, 8, 1};

std::vector<int> triple(int w) { return {w, w, w}; }

bool selected(std::span<const char> mask, std::size_t i) { return mask.empty() || mask[i]; }

}  // namespace

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gpcn:
      return "gpcn";
    case ModelKind::plain_ensemble:
      return "plain_ensemble";
    case ModelKind::ngcn:
      return "ngcn";
    case ModelKind::diffpool:
      return "diffpool";
  }
  return "unknown";
}

Matrix compose_prolongations(std::span<const Matrix> ps, std::size_t n) {
  if (ps.empty()) return Matrix::identity(n);
  Matrix out = ps.front();
  for (std::size_t i = 1; i < ps.size(); ++i) {
    if (out.cols() != ps[i].rows())
      throw DimensionError("compose_prolongations: factor " + std::to_string(i) + " is " +
                           ps[i].shape_string() + " after " + out.shape_string());
    out = matmul(out, ps[i]);
  }
  return out;
}

Hierarchy make_hierarchy(std::vector<Graph> graphs, int threads, bool optimize) {
  if (graphs.empty()) throw std::invalid_argument("make_hierarchy: no graphs");
  Hierarchy h;
  h.graphs = std::move(graphs);
  for (const Graph& g : h.graphs) h.laplacians.push_back(laplacian(g));
  const std::size_t links = h.graphs.size() - 1;
  h.prolongations.resize(links);
  h.distances.resize(links);
  if (!optimize) {
    for (std::size_t i = 0; i < links; ++i) {
      h.prolongations[i] = Matrix(h.graphs[i].node_count(), h.graphs[i + 1].node_count());
      h.distances[i] = std::numeric_limits<double>::quiet_NaN();
    }
    return h;
  }
  parallel_for(links, threads, [&](std::size_t i) {
    const Prolongation p = gdd(h.graphs[i + 1], h.graphs[i]);
    h.prolongations[i] = p.p;
    h.distances[i] = p.distance();
  });
  return h;
}

Hierarchy microtubule_hierarchy(int fine_rings, int threads, bool optimize) {
  if (fine_rings < 4 || fine_rings % 2 != 0)
    throw std::invalid_argument("microtubule_hierarchy: fine ring count must be even and >= 4");
  return make_hierarchy({make_tube(fine_rings, 13, 3), make_tube(fine_rings / 2, 13, 1),
                         make_tube(fine_rings / 2, 3, 0)},
                        threads, optimize);
}

const std::vector<std::string>& table_model_names() {
  static const std::vector<std::string> names = {"single_gcn", "ensemble2", "ensemble3", "gpcn2",
                                                 "gpcn3",      "a_gpcn2",   "a_gpcn3",   "ngcn3",
                                                 "ngcn5",      "diffpool3"};
  return names;
}

ModelSpec build_from_table(const std::string& name, const Hierarchy& h) {
  const auto& names = table_model_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown model '" + name + "'; valid names: " + list);
  }
  const bool needs_three = name == "gpcn3" || name == "a_gpcn3" || name == "diffpool3";
  const bool needs_two = needs_three || name == "gpcn2" || name == "a_gpcn2";
  if ((needs_three && h.graphs.size() < 3) || (needs_two && h.graphs.size() < 2))
    throw std::invalid_argument("model '" + name + "' needs a deeper hierarchy");

  ModelSpec s;
  s.name = name;
  const StructureMatrix& fine = h.laplacians.at(0);
  auto level = [&](const StructureMatrix& z, int w) { return GcnSpec{z, triple(w), kHead}; };

  if (name == "single_gcn") {
    s.levels = {level(fine, 64)};
  } else if (name == "ensemble2" || name == "ensemble3") {
    s.kind = ModelKind::plain_ensemble;
    const int members = name == "ensemble2" ? 2 : 3;
    for (int m = 0; m < members; ++m) s.levels.push_back(level(fine, 64 >> m));
  } else if (name == "gpcn2" || name == "a_gpcn2") {
    s.levels = {level(fine, 32), level(h.laplacians[1], 64)};
    s.prolongations = {h.prolongations[0]};
    s.adaptive = name[0] == 'a';
  } else if (name == "gpcn3" || name == "a_gpcn3") {
    s.levels = {level(fine, 16), level(h.laplacians[1], 32), level(h.laplacians[2], 64)};
    s.prolongations = {h.prolongations[0], h.prolongations[1]};
    s.adaptive = name[0] == 'a';
  } else if (name == "ngcn3" || name == "ngcn5") {
    s.kind = ModelKind::ngcn;
    s.radii = name == "ngcn3" ? std::vector<int>{1, 2, 4} : std::vector<int>{1, 2, 4, 8, 16};
    for (int r : s.radii) s.levels.push_back(level(structure_power(fine, r), 64));
  } else {  // diffpool3
    s.kind = ModelKind::diffpool;
    s.levels = {level(fine, 16), level(StructureMatrix{}, 32), level(StructureMatrix{}, 64)};
    for (const Graph& g : h.graphs) s.pooled_nodes.push_back(g.node_count());
    s.pooled_nodes.resize(3);
  }
  return s;
}

Model::Model(ModelSpec spec, std::size_t in_features, std::uint64_t seed)
    : spec_(std::move(spec)), in_features_(in_features) {
  const std::size_t levels = spec_.levels.size();
  if (levels == 0) throw std::invalid_argument("Model: no levels");
  if (in_features == 0) throw std::invalid_argument("Model: zero input features");
  const std::size_t n0 = spec_.levels[0].z.rows();
  if (n0 == 0) throw std::invalid_argument("Model: fine structure matrix is empty");

  switch (spec_.kind) {
    case ModelKind::gpcn:
      if (spec_.prolongations.size() + 1 != levels)
        throw std::invalid_argument("Model: gpcn needs one prolongation per coarser level");
      for (std::size_t i = 0; i + 1 < levels; ++i) {
        const Matrix& p = spec_.prolongations[i];
        if (p.rows() != spec_.levels[i].z.rows() || p.cols() != spec_.levels[i + 1].z.rows())
          throw DimensionError("Model: prolongation " + std::to_string(i) + " is " + p.shape_string() +
                               " between levels of " + std::to_string(spec_.levels[i].z.rows()) +
                               " and " + std::to_string(spec_.levels[i + 1].z.rows()) + " nodes");
      }
      break;
    case ModelKind::plain_ensemble:
    case ModelKind::ngcn:
      for (const auto& l : spec_.levels)
        if (l.z.rows() != n0) throw DimensionError("Model: ensemble members must share the node count");
      break;
    case ModelKind::diffpool:
      if (spec_.pooled_nodes.size() != levels || spec_.pooled_nodes[0] != n0)
        throw std::invalid_argument("Model: diffpool needs a node count per level");
      break;
  }
  if (spec_.kind == ModelKind::diffpool && spec_.adaptive)
    throw std::invalid_argument("Model: diffpool has no stored prolongations to adapt");

  Rng rng(seed);
  for (std::size_t i = 0; i < levels; ++i) {
    const auto& l = spec_.levels[i];
    if (l.dense_widths.empty() || l.dense_widths.back() != 1)
      throw std::invalid_argument("Model: every level needs a dense head ending in width 1");
    nets_.push_back(GcnNet::create(params_, "L" + std::to_string(i) + ".", static_cast<int>(i),
                                   in_features, l.gcn_widths, l.dense_widths, rng));
  }
  if (spec_.kind == ModelKind::diffpool) {
    pool_nets_.resize(levels);
    for (std::size_t i = 1; i < levels; ++i) {
      const std::vector<int> w = {static_cast<int>(spec_.pooled_nodes[i])};
      pool_nets_[i] = GcnNet::create(params_, "pool" + std::to_string(i) + ".", static_cast<int>(i),
                                     in_features, w, {}, rng, ad::Activation::linear);
    }
  }
  if (spec_.kind == ModelKind::gpcn) {
    if (spec_.adaptive) {
      for (std::size_t i = 0; i + 1 < levels; ++i)
        p_ids_.push_back(params_.add("P" + std::to_string(i) + std::to_string(i + 1),
                                     spec_.prolongations[i], static_cast<int>(i + 1)));
    } else {
      composed_.resize(levels);
      for (std::size_t i = 1; i < levels; ++i)
        composed_[i] = compose_prolongations(std::span(spec_.prolongations).first(i));
    }
  }
}

std::size_t Model::level_nodes(std::size_t level) const {
  if (spec_.kind == ModelKind::diffpool) return spec_.pooled_nodes.at(level);
  return spec_.levels.at(level).z.rows();
}

Model::Pass Model::forward(ad::Tape& tape, std::span<const ad::Var> vars, ad::Var x,
                           std::size_t blocks, std::span<const char> level_mask,
                           FlopsLedger* ledger) const {
  const std::size_t levels = spec_.levels.size();
  if (!level_mask.empty() && level_mask.size() != levels)
    throw std::invalid_argument("Model::forward: level mask has " + std::to_string(level_mask.size()) +
                                " entries for " + std::to_string(levels) + " levels");
  if (vars.size() != params_.size())
    throw std::invalid_argument("Model::forward: parameter binding size mismatch");
  const Matrix& xv = tape.value(x);
  const std::size_t n0 = level_nodes(0);
  if (xv.rows() != blocks * n0 || xv.cols() != in_features_)
    throw DimensionError("Model::forward: input " + xv.shape_string() + " is not " +
                         std::to_string(blocks) + " blocks of " + std::to_string(n0) + "x" +
                         std::to_string(in_features_));
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < levels; ++i)
    if (selected(level_mask, i)) deepest = i;

  Pass pass;
  pass.level_outputs.resize(levels);
  pass.first_preactivations.resize(levels);
  pass.lifts.resize(levels);
  const std::uint64_t f = in_features_;

  auto run_level = [&](std::size_t i, const StructureOperand& z, ad::Var xi) {
    const auto out = nets_[i].forward(tape, vars, z, xi, blocks, ledger);
    pass.first_preactivations[i] = out.first_preactivation;
    return out.y;
  };

  switch (spec_.kind) {
    case ModelKind::plain_ensemble:
    case ModelKind::ngcn:
      for (std::size_t i = 0; i < levels; ++i) {
        if (!selected(level_mask, i)) continue;
        pass.level_outputs[i] = run_level(i, StructureOperand::shared(spec_.levels[i].z), x);
      }
      break;

    case ModelKind::gpcn: {
      ad::Var chain;
      for (std::size_t i = 0; i <= deepest; ++i) {
        if (i > 0) {
          if (spec_.adaptive) {
            const ad::Var step = vars[p_ids_[i - 1]];
            if (i == 1) {
              chain = step;
            } else {
              chain = ad::matmul(tape, chain, step);
              if (ledger)
                ledger->add(FlopsCategory::projection,
                            flops_project(n0, level_nodes(i), level_nodes(i - 1)));
            }
          } else {
            chain = tape.constant(composed_[i]);
          }
          pass.lifts[i] = chain;
        }
        if (!selected(level_mask, i)) continue;
        if (i == 0) {
          pass.level_outputs[0] = run_level(0, StructureOperand::shared(spec_.levels[0].z), x);
          continue;
        }
        const std::uint64_t ni = level_nodes(i);
        ad::Var xi = ad::block_matmul(tape, chain, false, true, x, blocks);
        const ad::Var yi = run_level(i, StructureOperand::shared(spec_.levels[i].z), xi);
        pass.level_outputs[i] = ad::block_matmul(tape, chain, false, false, yi, blocks);
        if (ledger) {
          ledger->add(FlopsCategory::projection, blocks * flops_project(ni, f, n0));
          ledger->add(FlopsCategory::projection, blocks * flops_project(n0, 1, ni));
        }
      }
      break;
    }

    case ModelKind::diffpool: {
      StructureOperand z = StructureOperand::shared(spec_.levels[0].z);
      ad::Var xi = x;
      ad::Var chain;
      for (std::size_t i = 0; i <= deepest; ++i) {
        if (i > 0) {
          const std::uint64_t np = level_nodes(i - 1);
          const std::uint64_t ni = level_nodes(i);
          const ad::Var logits = pool_nets_[i].forward(tape, vars, z, xi, blocks, ledger).y;
          const ad::Var s = ad::row_softmax(tape, logits);
          const ad::Var zs = z.sparse ? ad::spmm(tape, *z.sparse, s, blocks)
                                      : ad::block_matmul(tape, z.dense, true, false, s, blocks);
          const ad::Var zc = ad::block_matmul(tape, s, true, true, zs, blocks);
          xi = ad::block_matmul(tape, s, true, true, xi, blocks);
          chain = i == 1 ? s : ad::block_matmul(tape, chain, true, false, s, blocks);
          z = StructureOperand::batched(zc, ni);
          pass.lifts[i] = chain;
          if (ledger) {
            ledger->add(FlopsCategory::projection, blocks * flops_project(np, ni, np));
            ledger->add(FlopsCategory::projection, blocks * flops_project(ni, ni, np));
            ledger->add(FlopsCategory::projection, blocks * flops_project(ni, f, np));
            if (i > 1) ledger->add(FlopsCategory::projection, blocks * flops_project(n0, ni, np));
          }
        }
        if (!selected(level_mask, i)) continue;
        const ad::Var yi = run_level(i, z, xi);
        if (i == 0) {
          pass.level_outputs[0] = yi;
        } else {
          pass.level_outputs[i] = ad::block_matmul(tape, chain, true, false, yi, blocks);
          if (ledger)
            ledger->add(FlopsCategory::projection, blocks * flops_project(n0, 1, level_nodes(i)));
        }
      }
      break;
    }
  }

  for (std::size_t i = 0; i < levels; ++i) {
    if (!pass.level_outputs[i].valid()) continue;
    pass.output = pass.output.valid() ? ad::add(tape, pass.output, pass.level_outputs[i])
                                      : pass.level_outputs[i];
  }
  if (!pass.output.valid()) throw std::invalid_argument("Model::forward: level mask selects nothing");
  return pass;
}

Matrix Model::predict(const Matrix& x, std::size_t blocks, std::span<const char> level_mask,
                      FlopsLedger* ledger) const {
  ad::Tape tape;
  const std::vector<char> none(params_.size(), 0);
  const auto vars = bind_parameters(tape, params_, none);
  const ad::Var xv = tape.constant(x);
  return tape.value(forward(tape, vars, xv, blocks, level_mask, ledger).output);
}

std::vector<char> Model::parameter_mask(std::span<const char> levels) const {
  if (levels.size() != level_count())
    throw std::invalid_argument("parameter_mask: one flag per level is required");
  std::vector<char> mask(params_.size(), 0);
  for (std::size_t i = 0; i < params_.size(); ++i)
    mask[i] = levels[static_cast<std::size_t>(params_[i].level)];
  return mask;
}

Matrix Model::composed_prolongation(std::size_t level) const {
  if (level >= level_count()) throw std::out_of_range("composed_prolongation: no such level");
  switch (spec_.kind) {
    case ModelKind::gpcn:
      if (level == 0) return Matrix::identity(level_nodes(0));
      if (!spec_.adaptive) return composed_[level];
      {
        std::vector<Matrix> chain;
        for (std::size_t i = 0; i < level; ++i) chain.push_back(params_[p_ids_[i]].value);
        return compose_prolongations(chain);
      }
    case ModelKind::plain_ensemble:
    case ModelKind::ngcn:
      return Matrix::identity(level_nodes(0));
    case ModelKind::diffpool:
      break;
  }
  throw std::invalid_argument("composed_prolongation: diffpool operators depend on the input");
}

Matrix gpcn_forward(const Model& model, const Matrix& x, std::span<const char> level_mask) {
  return model.predict(x, 1, level_mask);
}

Matrix ngcn_forward(const Model& model, const Matrix& x) {
  if (model.spec().kind != ModelKind::ngcn) throw std::invalid_argument("ngcn_forward: not an N-GCN model");
  return model.predict(x, 1);
}

DiffPoolResult diffpool_coarsen(const GcnNet& pool, const ParameterSet& params,
                                const StructureMatrix& z, const Matrix& x) {
  ad::Tape tape;
  const std::vector<char> none(params.size(), 0);
  const auto vars = bind_parameters(tape, params, none);
  const ad::Var xv = tape.constant(x);
  const Matrix logits = tape.value(pool.forward(tape, vars, StructureOperand::shared(z), xv, 1, nullptr).y);
  DiffPoolResult r;
  r.s = ad::row_softmax(logits);
  r.x = matmul(r.s, true, x, false);
  r.z = matmul(r.s, true, spmm(z, r.s), false);
  return r;
}

Matrix ensemble_input_gradient(const Model& model, const Matrix& x) {
  if (model.spec().kind == ModelKind::diffpool)
    throw std::invalid_argument("ensemble_input_gradient: pooling operators depend on the input");
  ad::Tape tape;
  const auto vars = bind_parameters(tape, model.params());
  const ad::Var xv = tape.constant(x);
  const auto pass = model.forward(tape, vars, xv, 1, {}, nullptr);
  tape.backward(ad::sum_all(tape, pass.output));
  Matrix total(x.rows(), x.cols());
  for (std::size_t i = 0; i < model.level_count(); ++i) {
    const Matrix& w1 = model.params()[model.level_net(i).gcn_layers().front().w].value;
    Matrix g = first_layer_input_gradient(model.spec().levels[i].z,
                                          tape.grad(pass.first_preactivations[i]), w1);
    if (pass.lifts[i].valid()) g = matmul(tape.value(pass.lifts[i]), g);
    total += g;
  }
  return total;
}

Matrix ensemble_input_gradient_tape(const Model& model, const Matrix& x) {
  ad::Tape tape;
  const std::vector<char> none(model.params().size(), 0);
  const auto vars = bind_parameters(tape, model.params(), none);
  const ad::Var xv = tape.variable(x);
  const auto pass = model.forward(tape, vars, xv, 1, {}, nullptr);
  tape.backward(ad::sum_all(tape, pass.output));
  return tape.grad(xv);
}

}  // namespace gpcn
