#include "gpcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gpcn/gcn.hpp"

namespace gpcn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix stack_rows(const std::vector<Matrix>& frames, std::span<const std::size_t> idx) {
  const std::size_t n = frames.at(idx.front()).rows();
  const std::size_t c = frames.at(idx.front()).cols();
  Matrix out(idx.size() * n, c);
  for (std::size_t b = 0; b < idx.size(); ++b)
    std::copy(frames[idx[b]].values().begin(), frames[idx[b]].values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(b * n * c));
  return out;
}

std::vector<char> all_levels(const Model& m) { return std::vector<char>(m.level_count(), 1); }

}  // namespace

double nmse(const Matrix& pred, const Matrix& target) {
  if (!pred.same_shape(target))
    throw DimensionError("nmse: " + pred.shape_string() + " vs " + target.shape_string());
  if (pred.size() == 0) throw DimensionError("nmse: empty operands");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.values()[i] - target.values()[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::joint:
      return "joint";
    case ScheduleKind::gamma_cycle:
      return "gamma_cycle";
    case ScheduleKind::coarse_to_fine:
      return "coarse_to_fine";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  for (auto k : {ScheduleKind::joint, ScheduleKind::gamma_cycle, ScheduleKind::coarse_to_fine})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown schedule '" + s + "' (expected joint, gamma_cycle or coarse_to_fine)");
}

double RunRecord::best_val() const { return rows.empty() ? kInf : rows.back().best_val_nmse; }

std::vector<int> RunRecord::level_sequence() const {
  std::vector<int> out;
  for (std::size_t i = 1; i < rows.size(); ++i) out.push_back(rows[i].level);
  return out;
}

TrainingData prepare_training_data(const Dataset& d, std::uint64_t split_seed) {
  TrainingData t;
  t.n = d.n;
  t.features = d.features;
  t.split = split_frames(d.size(), split_seed);
  t.normalization = fit_normalization(d, t.split.train);
  for (std::size_t f = 0; f < d.size(); ++f) {
    t.x.push_back(normalize_x(t.normalization, d.x[f]));
    t.y.push_back(normalize_y(t.normalization, d.y[f]));
  }
  return t;
}

std::vector<int> gamma_cycle_sequence(int levels, int gamma, int level) {
  if (levels < 2) throw std::invalid_argument("gamma cycle needs at least two levels");
  if (gamma < 0) throw std::invalid_argument("gamma must be nonnegative");
  if (level == levels - 1) return {level};
  std::vector<int> seq = {level};
  for (int g = 0; g < gamma; ++g) {
    const auto inner = gamma_cycle_sequence(levels, gamma, level + 1);
    seq.insert(seq.end(), inner.begin(), inner.end());
  }
  seq.push_back(level);
  return seq;
}

FlopsLedger forward_cost(const Model& model, std::span<const char> level_mask, std::size_t blocks) {
  FlopsLedger ledger;
  const Matrix zeros(blocks * model.level_nodes(0), model.in_features());
  (void)model.predict(zeros, blocks, level_mask, &ledger);
  return ledger;
}

Trainer::Trainer(Model& model, const TrainingData& data, const ScheduleSpec& schedule, std::uint64_t seed)
    : model_(model), data_(data), schedule_(schedule), rng_(Rng(seed).fork(1)) {
  if (schedule_.batch_size <= 0 || schedule_.batches_per_epoch <= 0 || schedule_.total_epochs < 0 ||
      schedule_.smoothing_epochs <= 0 || schedule_.patience <= 0)
    throw std::invalid_argument("schedule counts must be positive");
  if (data_.features != model_.in_features() || data_.n != model_.level_nodes(0))
    throw DimensionError("training data does not match the model input");
  if (data_.split.train.empty() || data_.split.validation.empty())
    throw std::invalid_argument("training needs nonempty train and validation splits");
  std::vector<Matrix> values;
  for (const auto& p : model_.params().items()) values.push_back(p.value);
  adam_ = make_adam_state(values);
  order_ = data_.split.train;
  rng_.shuffle(std::span(order_));
  record_.model = model_.spec().name;
  record_.seed = seed;
  record_.schedule = to_string(schedule_.kind);
}

const FlopsLedger& Trainer::cost_of(std::span<const char> levels) {
  std::vector<char> key(levels.begin(), levels.end());
  auto it = cost_cache_.find(key);
  if (it == cost_cache_.end())
    it = cost_cache_.emplace(key, forward_cost(model_, levels, static_cast<std::size_t>(schedule_.batch_size))).first;
  return it->second;
}

std::vector<std::size_t> Trainer::next_batch() {
  const std::size_t bs = std::min<std::size_t>(static_cast<std::size_t>(schedule_.batch_size), order_.size());
  if (cursor_ + bs > order_.size()) {
    order_ = data_.split.train;
    rng_.shuffle(std::span(order_));
    cursor_ = 0;
  }
  std::vector<std::size_t> b(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                             order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + bs));
  cursor_ += bs;
  return b;
}

double Trainer::evaluate(std::span<const std::size_t> frames, std::span<const char> forward_levels) const {
  constexpr std::size_t chunk = 16;
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < frames.size(); start += chunk) {
    const auto part = frames.subspan(start, std::min(chunk, frames.size() - start));
    const Matrix pred = model_.predict(stack_rows(data_.x, part), part.size(), forward_levels);
    const Matrix target = stack_rows(data_.y, part);
    sse += nmse(pred, target) * static_cast<double>(pred.size());
    count += pred.size();
  }
  return sse / static_cast<double>(count);
}

void Trainer::record(double train, double val, int level) {
  best_ = std::min(best_, val);
  EpochRow r;
  r.flops = ledger_.total();
  r.epoch = epochs_done_;
  r.train_nmse = train;
  r.val_nmse = val;
  r.best_val_nmse = best_;
  r.level = level;
  r.stage = stage_;
  record_.rows.push_back(r);
}

bool Trainer::epoch(std::span<const char> forward_levels, std::span<const char> train_levels, int level_label) {
  if (budget_hit_ || record_.aborted) return false;
  const std::vector<char> mask = model_.parameter_mask(train_levels);
  FlopsLedger batch_cost;
  batch_cost.add(cost_of(forward_levels));
  batch_cost.add(cost_of(train_levels), 2);
  const std::uint64_t cost = batch_cost.total();

  double loss_sum = 0.0;
  int done = 0;
  for (int b = 0; b < schedule_.batches_per_epoch; ++b) {
    if (schedule_.flops_budget > 0 && ledger_.total() + cost > schedule_.flops_budget) {
      budget_hit_ = true;
      break;
    }
    const auto idx = next_batch();
    ad::Tape tape;
    const auto vars = bind_parameters(tape, model_.params(), mask);
    const ad::Var xv = tape.constant(stack_rows(data_.x, idx));
    const auto pass = model_.forward(tape, vars, xv, idx.size(), forward_levels, nullptr);
    const ad::Var loss = ad::mean_squared_error(tape, pass.output, stack_rows(data_.y, idx));
    const double l = tape.value(loss)(0, 0);
    if (!std::isfinite(l)) {
      record_.aborted = true;
      record_.abort_reason = "non-finite loss at epoch " + std::to_string(epochs_done_ + 1);
      return false;
    }
    tape.backward(loss);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) adam_update(adam_, i, model_.params()[i].value, tape.grad(vars[i]));
    ledger_.add(batch_cost);
    batch_costs_.push_back(cost);
    loss_sum += l;
    ++done;
  }
  if (done == 0) return false;
  ++epochs_done_;
  record(loss_sum / done, evaluate(data_.split.validation, forward_levels), level_label);
  return !budget_hit_;
}

bool Trainer::run_joint() {
  const auto all = all_levels(model_);
  while (epochs_done_ < schedule_.total_epochs)
    if (!epoch(all, all, -1)) return false;
  return true;
}

bool Trainer::run_gamma() {
  const int levels = static_cast<int>(model_.level_count());
  const auto seq = gamma_cycle_sequence(levels, schedule_.gamma);
  const auto all = all_levels(model_);
  while (true) {
    for (int lvl : seq) {
      std::vector<char> train(static_cast<std::size_t>(levels), 0);
      train[static_cast<std::size_t>(lvl)] = 1;
      std::vector<char> fwd = all;
      if (schedule_.partial_smoothing)
        for (int i = 0; i < lvl; ++i) fwd[static_cast<std::size_t>(i)] = 0;
      for (int s = 0; s < schedule_.smoothing_epochs; ++s) {
        if (epochs_done_ >= schedule_.total_epochs) return true;
        if (!epoch(fwd, train, lvl)) return false;
      }
    }
  }
}

bool Trainer::run_coarse_to_fine() {
  const std::size_t levels = model_.level_count();
  for (std::size_t s = 1; s <= levels; ++s) {
    stage_ = static_cast<int>(s);
    std::vector<char> active(levels, 0);
    for (std::size_t i = levels - s; i < levels; ++i) active[i] = 1;
    record_.stage_starts.push_back(epochs_done_ + 1);
    double stage_best = kInf;
    int since = 0;
    while (epochs_done_ < schedule_.total_epochs) {
      if (!epoch(active, active, -1)) return false;
      const double v = record_.rows.back().val_nmse;
      if (v < stage_best) {
        stage_best = v;
        since = 0;
      } else {
        ++since;
      }
      if (s < levels && since >= schedule_.patience) break;
    }
    if (epochs_done_ >= schedule_.total_epochs) return true;
  }
  return true;
}

RunRecord Trainer::run() {
  if (schedule_.kind == ScheduleKind::gamma_cycle && model_.level_count() < 2)
    throw std::invalid_argument("gamma cycle needs a model with at least two levels");
  if (schedule_.kind == ScheduleKind::gamma_cycle) (void)gamma_cycle_sequence(static_cast<int>(model_.level_count()), schedule_.gamma);
  const auto all = all_levels(model_);
  best_ = kInf;
  record(evaluate(data_.split.train, all), evaluate(data_.split.validation, all), -1);
  switch (schedule_.kind) {
    case ScheduleKind::joint:
      run_joint();
      break;
    case ScheduleKind::gamma_cycle:
      run_gamma();
      break;
    case ScheduleKind::coarse_to_fine:
      run_coarse_to_fine();
      break;
  }
  return record_;
}

RunRecord train(Model& model, const TrainingData& data, const ScheduleSpec& schedule, std::uint64_t seed) {
  Trainer t(model, data, schedule, seed);
  return t.run();
}

RunRecord gamma_cycle(Model& model, const TrainingData& data, int gamma, int smoothing_epochs,
                      ScheduleSpec schedule, std::uint64_t seed) {
  schedule.kind = ScheduleKind::gamma_cycle;
  schedule.gamma = gamma;
  schedule.smoothing_epochs = smoothing_epochs;
  return train(model, data, schedule, seed);
}

RunRecord coarse_to_fine(Model& model, const TrainingData& data, ScheduleSpec schedule, std::uint64_t seed) {
  schedule.kind = ScheduleKind::coarse_to_fine;
  return train(model, data, schedule, seed);
}

void write_run_csv(std::ostream& os, const RunRecord& r) {
  os << "flops,epoch,train_nmse,best_val_nmse\n";
  for (const auto& row : r.rows)
    os << row.flops << ',' << row.epoch << ',' << format_double(row.train_nmse) << ','
       << format_double(row.best_val_nmse) << '\n';
}

std::vector<SummaryRow> summarize(std::span<const RunRecord> runs) {
  std::vector<SummaryRow> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) { return s.model == r.model; });
    if (it == out.end()) {
      out.push_back({r.model});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.best_val());
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[i].mean = mean;
    out[i].stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    out[i].min = *std::min_element(v.begin(), v.end());
    out[i].runs = v.size();
  }
  return out;
}

void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "model,mean_best_val_nmse,std_best_val_nmse,min_best_val_nmse,runs\n";
  for (const auto& r : rows)
    os << r.model << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ','
       << format_double(r.min) << ',' << r.runs << '\n';
}

}  // namespace gpcn

namespace gpcn {

std::vector<LayerCost> predicted_layer_costs(const Model& model, std::size_t blocks) {
  const ModelSpec& s = model.spec();
  const std::uint64_t b = blocks;
  const std::uint64_t f0 = model.in_features();
  const std::uint64_t n0 = model.level_nodes(0);
  std::vector<LayerCost> out;
  auto push = [&](int level, std::string name, FlopsCategory cat, std::uint64_t flops) {
    out.push_back({level, std::move(name), cat, flops});
  };
  auto nnz_of = [&](std::size_t i) -> std::uint64_t {
    if (s.kind == ModelKind::diffpool && i > 0) return model.level_nodes(i) * model.level_nodes(i);
    return s.levels[i].z.nnz();
  };
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    const int li = static_cast<int>(i);
    const std::uint64_t n = model.level_nodes(i);
    if (i > 0 && s.kind == ModelKind::gpcn) {
      if (s.adaptive && i > 1)
        push(li, "compose", FlopsCategory::projection, flops_project(n0, n, model.level_nodes(i - 1)));
      push(li, "restrict", FlopsCategory::projection, b * flops_project(n, f0, n0));
    }
    if (i > 0 && s.kind == ModelKind::diffpool) {
      const std::uint64_t np = model.level_nodes(i - 1);
      push(li, "pool.gcn0", FlopsCategory::gcn_layer, b * flops_gcn_layer(np, f0, n, nnz_of(i - 1)));
      push(li, "pool.ZS", FlopsCategory::projection, b * flops_project(np, n, np));
      push(li, "pool.StZS", FlopsCategory::projection, b * flops_project(n, n, np));
      push(li, "pool.StX", FlopsCategory::projection, b * flops_project(n, f0, np));
      if (i > 1) push(li, "pool.chain", FlopsCategory::projection, b * flops_project(n0, n, np));
    }
    std::uint64_t f = f0;
    std::uint64_t concat = 0;
    for (std::size_t l = 0; l < s.levels[i].gcn_widths.size(); ++l) {
      const std::uint64_t c = static_cast<std::uint64_t>(s.levels[i].gcn_widths[l]);
      push(li, "gcn" + std::to_string(l), FlopsCategory::gcn_layer, b * flops_gcn_layer(n, f, c, nnz_of(i)));
      f = c;
      concat += c;
    }
    f = concat;
    for (std::size_t l = 0; l < s.levels[i].dense_widths.size(); ++l) {
      const std::uint64_t c = static_cast<std::uint64_t>(s.levels[i].dense_widths[l]);
      push(li, "dense" + std::to_string(l), FlopsCategory::dense, b * flops_dense(n, f, c));
      f = c;
    }
    if (i > 0 && (s.kind == ModelKind::gpcn || s.kind == ModelKind::diffpool))
      push(li, "lift", FlopsCategory::projection, b * flops_project(n0, 1, n));
  }
  return out;
}

}  // namespace gpcn
