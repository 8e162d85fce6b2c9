#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gpcn/adam.hpp"
#include "gpcn/dataset.hpp"
#include "gpcn/ensemble.hpp"
#include "gpcn/flops.hpp"

namespace gpcn {

// Mean squared error of already normalized signals.
double nmse(const Matrix& pred, const Matrix& target);

enum class ScheduleKind { joint, gamma_cycle, coarse_to_fine };
const char* to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(const std::string& s);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::joint;
  int gamma = 1;
  int smoothing_epochs = 1;
  int patience = 10;
  int total_epochs = 1000;
  int batches_per_epoch = 20;
  int batch_size = 8;
  std::uint64_t flops_budget = 0;  // 0: unlimited
  // gamma_cycle only: smooth on the output of the visited level and coarser
  // ones instead of masking gradients of the full ensemble.
  bool partial_smoothing = false;
};

struct EpochRow {
  std::uint64_t flops = 0;
  int epoch = 0;
  double train_nmse = 0.0;
  double val_nmse = 0.0;
  double best_val_nmse = 0.0;
  int level = -1;  // trained level, -1 when all active levels train
  int stage = 0;
};

struct RunRecord {
  std::string model;
  std::uint64_t seed = 0;
  std::string schedule;
  std::vector<EpochRow> rows;           // rows[0] is the initial evaluation
  std::vector<int> stage_starts;        // epoch at which each stage began
  bool aborted = false;
  std::string abort_reason;

  double best_val() const;
  // Level trained in each epoch (gamma cycles); -1 entries for joint epochs.
  std::vector<int> level_sequence() const;
};

// Normalized frames and the split they came from.
struct TrainingData {
  std::size_t n = 0;
  std::size_t features = 0;
  std::vector<Matrix> x, y;
  Split split;
  Normalization normalization;
};

TrainingData prepare_training_data(const Dataset& d, std::uint64_t split_seed);

// gamma-cycle visiting order from `level` down to the coarsest of `levels`.
std::vector<int> gamma_cycle_sequence(int levels, int gamma, int level = 0);

// Forward cost of one batch of `blocks` samples through the selected levels.
FlopsLedger forward_cost(const Model& model, std::span<const char> level_mask, std::size_t blocks);

struct LayerCost {
  int level = 0;
  std::string layer;
  FlopsCategory category = FlopsCategory::gcn_layer;
  std::uint64_t flops = 0;
};

// Forward cost of every layer and projection evaluated from the cost formulas
// and the model's shapes alone.
std::vector<LayerCost> predicted_layer_costs(const Model& model, std::size_t blocks = 1);

class Trainer {
 public:
  Trainer(Model& model, const TrainingData& data, const ScheduleSpec& schedule, std::uint64_t seed);

  RunRecord run();

  const FlopsLedger& ledger() const { return ledger_; }
  // Cost charged for each batch so far.
  const std::vector<std::uint64_t>& batch_costs() const { return batch_costs_; }

  // One epoch; returns false once the budget is exhausted or the loss is not
  // finite. forward_levels selects the output, train_levels the parameters.
  bool epoch(std::span<const char> forward_levels, std::span<const char> train_levels, int level_label);
  double evaluate(std::span<const std::size_t> frames, std::span<const char> forward_levels) const;

 private:
  bool run_joint();
  bool run_gamma();
  bool run_coarse_to_fine();
  std::vector<std::size_t> next_batch();
  void record(double train, double val, int level);

  Model& model_;
  const TrainingData& data_;
  ScheduleSpec schedule_;
  AdamState adam_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  FlopsLedger ledger_;
  std::vector<std::uint64_t> batch_costs_;
  std::map<std::vector<char>, FlopsLedger> cost_cache_;
  const FlopsLedger& cost_of(std::span<const char> levels);
  RunRecord record_;
  double best_ = 0.0;
  int epochs_done_ = 0;
  int stage_ = 0;
  bool budget_hit_ = false;
};

RunRecord train(Model& model, const TrainingData& data, const ScheduleSpec& schedule, std::uint64_t seed);
RunRecord gamma_cycle(Model& model, const TrainingData& data, int gamma, int smoothing_epochs,
                      ScheduleSpec schedule, std::uint64_t seed);
RunRecord coarse_to_fine(Model& model, const TrainingData& data, ScheduleSpec schedule, std::uint64_t seed);

// flops,epoch,train_nmse,best_val_nmse
void write_run_csv(std::ostream& os, const RunRecord& r);

struct SummaryRow {
  std::string model;
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  std::size_t runs = 0;
};
std::vector<SummaryRow> summarize(std::span<const RunRecord> runs);
void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows);

}  // namespace gpcn
