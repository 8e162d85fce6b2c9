#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "gpcn/checkpoint.hpp"
#include "gpcn/dataset.hpp"
#include "gpcn/eigen_sym.hpp"
#include "gpcn/ensemble.hpp"
#include "gpcn/gdd.hpp"
#include "gpcn/parallel.hpp"
#include "gpcn/rng.hpp"
#include "gpcn/simulator.hpp"
#include "gpcn/training.hpp"

namespace gpcn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Typed access to one object of the config that remembers which keys were
// read, so leftovers can be reported.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw ConfigError(label() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_ && j_->contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    try {
      return j_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(key_path(key) + ": wrong type (" + j_->at(key).dump() + ")");
    }
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(has(key) ? &j_->at(key) : nullptr, key_path(key));
  }

  void allow(const std::string& key) { seen_.insert(key); }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, v] : j_->items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + key_path(k) + "'");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }

  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<int> threads;
};

struct Context {
  json config = json::object();
  std::uint64_t seed = 0;
  int threads = 1;
  DataFormat format = DataFormat::csv;
  fs::path out = "out";
};

const std::vector<std::string> kSections = {"simulation", "grid",  "gdd",  "coarse_search",
                                            "limit_curve", "train", "flops"};

Context load_context(const Common& c) {
  Context ctx;
  if (!c.config_path.empty()) {
    std::ifstream is(c.config_path);
    if (!is) throw ConfigError("cannot open config file '" + c.config_path + "'");
    try {
      ctx.config = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + c.config_path + "' is not valid JSON: " + e.what());
    }
  }
  Section top(&ctx.config, "");
  ctx.seed = top.get<std::uint64_t>("seed", 0);
  ctx.threads = top.get<int>("threads", 1);
  std::string format = top.get<std::string>("format", "csv");
  std::string out = top.get<std::string>("output_dir", "out");
  for (const auto& s : kSections) top.allow(s);
  top.finish();
  if (c.seed) ctx.seed = *c.seed;
  if (c.threads) ctx.threads = *c.threads;
  if (!c.format.empty()) format = c.format;
  if (!c.out.empty()) out = c.out;
  if (ctx.threads < 1) throw ConfigError("threads: must be at least 1");
  try {
    ctx.format = parse_format(format);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("format: ") + e.what());
  }
  ctx.out = out;
  return ctx;
}

Section section(Context& ctx, const std::string& name) {
  return Section(ctx.config.contains(name) ? &ctx.config.at(name) : nullptr, name);
}

void write_manifest(const Context& ctx, const std::string& command, json extra) {
  fs::create_directories(ctx.out);
  json m = std::move(extra);
  m["command"] = command;
  m["config"] = ctx.config;
  m["seed"] = ctx.seed;
  m["format"] = ctx.format == DataFormat::csv ? "csv" : "bin";
  std::ofstream os(ctx.out / "manifest.json");
  os << m.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + (ctx.out / "manifest.json").string());
}

std::vector<int> parse_ints(const std::string& body, const std::string& spec) {
  std::vector<int> v;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int x = 0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), x);
    if (r.ec != std::errc() || r.ptr != item.data() + item.size())
      throw ConfigError("bad graph spec '" + spec + "'");
    v.push_back(x);
  }
  return v;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream os(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << '\n';
  }
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

// ---------------------------------------------------------------- generate

int cmd_generate(Context& ctx, std::ostream& out) {
  Section s = section(ctx, "simulation");
  GenerateOptions o;
  o.geometry.n_rings = s.get("n_rings", 12);
  o.geometry.k = s.get("k", 13);
  o.geometry.offset = s.get("offset", 3);
  sim::SimConfig& c = o.base;
  c.ramp_steps = s.get("ramp_steps", c.ramp_steps);
  c.hold_steps = s.get("hold_steps", c.hold_steps);
  c.save_every = s.get("save_every", c.save_every);
  c.dt = s.get("dt", c.dt);
  c.max_force = s.get("max_force", c.max_force);
  c.langevin = s.get("langevin", c.langevin);
  c.temperature = s.get("temperature", c.temperature);
  c.damping_steps = s.get("damping_steps", c.damping_steps);
  c.field.bond_unit = s.get("bond_unit", c.field.bond_unit);
  c.field.angle_unit = s.get("angle_unit", c.field.angle_unit);
  c.eleven_columns = s.get("eleven_columns", c.eleven_columns);
  const int max_failed = s.get("max_failed_runs", 0);
  s.finish();
  if (c.ramp_steps < 0 || c.hold_steps < 0 || c.save_every <= 0 ||
      (c.ramp_steps + c.hold_steps) % c.save_every != 0 || c.ramp_steps + c.hold_steps == 0)
    throw ConfigError("simulation.save_every: must be positive and divide ramp_steps + hold_steps");
  if (!(c.dt > 0.0)) throw ConfigError("simulation.dt: must be positive");
  if (!(c.damping_steps > 0.0)) throw ConfigError("simulation.damping_steps: must be positive");
  if (!(c.field.bond_unit > 0.0) || !(c.field.angle_unit > 0.0))
    throw ConfigError("simulation.bond_unit/angle_unit: must be positive");

  Section g = section(ctx, "grid");
  const auto varied = g.get<std::vector<std::string>>("varied", {"LatAssoc", "LongAssoc"});
  o.grid.values = g.get<std::vector<double>>("values", {0.1, 1.0, 1.9});
  o.grid.fixed = g.get("fixed", 1.0);
  g.finish();
  o.grid.varied.clear();
  for (std::size_t i = 0; i < varied.size(); ++i) {
    try {
      o.grid.varied.push_back(sim::strength_from_string(varied[i]));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("grid.varied[" + std::to_string(i) + "]: " + e.what());
    }
  }
  if (o.grid.values.empty()) throw ConfigError("grid.values: must not be empty");
  for (std::size_t i = 0; i < o.grid.values.size(); ++i)
    if (!(o.grid.values[i] > 0.0))
      throw ConfigError("grid.values[" + std::to_string(i) + "]: strength must be positive, got " +
                        format_double(o.grid.values[i]));
  if (!(o.grid.fixed > 0.0)) throw ConfigError("grid.fixed: strength must be positive");
  o.seed = ctx.seed;
  o.threads = ctx.threads;

  Dataset d = generate_dataset(o);
  d.manifest["command"] = "generate";
  d.manifest["config"] = ctx.config;
  save_dataset(ctx.out, d, ctx.format);
  const std::size_t failed = d.manifest["failed_runs"].size();
  out << "wrote " << d.size() << " frames from " << d.manifest["runs"].size() << " runs to " << ctx.out.string()
      << "\n";
  if (failed > static_cast<std::size_t>(std::max(max_failed, 0)))
    throw NumericalFailure(std::to_string(failed) + " simulation runs diverged (see manifest.json)");
  return kExitOk;
}

// ---------------------------------------------------------------- gdd

struct GddFlags {
  std::string coarse, fine;
  std::optional<double> alpha;
};

int cmd_gdd(Context& ctx, const GddFlags& f, std::ostream& out) {
  Section s = section(ctx, "gdd");
  std::string coarse_spec = s.get<std::string>("coarse", "");
  std::string fine_spec = s.get<std::string>("fine", "");
  double alpha = s.get("alpha", 1.0);
  s.finish();
  if (!f.coarse.empty()) coarse_spec = f.coarse;
  if (!f.fine.empty()) fine_spec = f.fine;
  if (f.alpha) alpha = *f.alpha;
  if (coarse_spec.empty() || fine_spec.empty()) throw ConfigError("gdd: both --coarse and --fine graphs are required");
  if (!(alpha > 0.0)) throw ConfigError("gdd.alpha: must be positive");
  const Graph coarse = parse_graph(coarse_spec);
  const Graph fine = parse_graph(fine_spec);
  if (coarse.node_count() > fine.node_count())
    throw ConfigError("gdd: coarse graph has " + std::to_string(coarse.node_count()) +
                      " nodes, more than the fine graph's " + std::to_string(fine.node_count()));
  const GddResult r = gdd_detailed(coarse, fine, alpha);
  const Prolongation& p = r.prolongation;
  fs::create_directories(ctx.out);
  write_matrix_csv(ctx.out / "P.csv", p.p);
  write_manifest(ctx, "gdd",
                 {{"coarse", coarse_spec},
                  {"fine", fine_spec},
                  {"alpha", alpha},
                  {"distance", p.distance()},
                  {"objective", p.objective},
                  {"warm_start_objective", r.warm_start_objective},
                  {"rlap_cost", r.assignment.total_cost},
                  {"iterations", p.iterations},
                  {"final_gradient_norm", p.final_gradient_norm},
                  {"max_orthogonality_error", p.max_orthogonality_error}});
  out << "distance " << format_double(p.distance()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- coarse-search

int cmd_coarse_search(Context& ctx, std::ostream& out) {
  Section s = section(ctx, "coarse_search");
  const std::string fine_spec = s.get<std::string>("fine", "tube:48,13,3");
  const int n_rings = s.get("n_rings", 24);
  const auto ks = s.get<std::vector<int>>("k", {3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const auto ps = s.get<std::vector<int>>("p", {0, 1, 2, 3});
  const auto ws = s.get<std::vector<double>>("seam_weights", {1.0, 2.0});
  s.finish();
  const Graph fine = parse_graph(fine_spec);
  for (int k : ks)
    if (static_cast<std::size_t>(n_rings) * static_cast<std::size_t>(std::max(k, 0)) > fine.node_count())
      throw ConfigError("coarse_search.k: Tube(" + std::to_string(n_rings) + "," + std::to_string(k) +
                        ",p) is larger than the fine graph");
  std::vector<CoarseSearchRow> rows;
  try {
    rows = coarse_search(fine, n_rings, ks, ps, ws, ctx.threads);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("coarse_search: ") + e.what());
  }
  fs::create_directories(ctx.out);
  std::ofstream os(ctx.out / "coarse_search.csv");
  os << "k,p,seam_weight,distance\n";
  for (const auto& r : rows)
    os << r.k << ',' << r.p << ',' << format_double(r.seam_weight) << ',' << format_double(r.distance) << '\n';
  if (!os) throw std::runtime_error("cannot write coarse_search.csv");
  write_manifest(ctx, "coarse-search", {{"fine", fine_spec}, {"rows", rows.size()}});
  const auto best = std::min_element(rows.begin(), rows.end(),
                                     [](const auto& a, const auto& b) { return a.distance < b.distance; });
  if (best != rows.end())
    out << "nearest Tube(" << n_rings << "," << best->k << "," << best->p << ") seam_weight "
        << format_double(best->seam_weight) << " distance " << format_double(best->distance) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- limit-curve

int cmd_limit_curve(Context& ctx, std::ostream& out) {
  Section s = section(ctx, "limit_curve");
  auto ns = s.get<std::vector<int>>("n", {4, 5, 6, 7, 8, 9, 10});
  const int k = s.get("k", 13);
  const int fine_offset = s.get("fine_offset", 3);
  const int tube_offset = s.get("tube_offset", 1);
  const auto families = s.get<std::vector<std::string>>("families", {"tube", "grid"});
  s.finish();
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (const auto& f : families)
    if (f != "tube" && f != "grid") throw ConfigError("limit_curve.families: unknown family '" + f + "'");
  struct Cell {
    int n;
    std::string family;
    double distance = 0.0;
  };
  std::vector<Cell> cells;
  for (int n : ns)
    for (const auto& f : families) cells.push_back({n, f});
  for (const auto& c : cells)
    if (c.n < 2) throw ConfigError("limit_curve.n: values must be at least 2");
  parallel_for(cells.size(), ctx.threads, [&](std::size_t i) {
    Cell& c = cells[i];
    const Graph fine = make_tube(2 * c.n, k, fine_offset);
    const Graph coarse = c.family == "tube" ? make_tube(c.n, k, tube_offset) : make_grid(c.n, k);
    c.distance = gdd(coarse, fine).distance();
  });
  fs::create_directories(ctx.out);
  std::ofstream os(ctx.out / "limit_curve.csv");
  os << "n,family,distance\n";
  for (const auto& c : cells) {
    os << c.n << ',' << c.family << ',' << format_double(c.distance) << '\n';
    out << c.n << ' ' << c.family << ' ' << format_double(c.distance) << '\n';
  }
  if (!os) throw std::runtime_error("cannot write limit_curve.csv");
  write_manifest(ctx, "limit-curve", {{"rows", cells.size()}});
  return kExitOk;
}

// ---------------------------------------------------------------- train

int cmd_train(Context& ctx, std::ostream& out) {
  Section s = section(ctx, "train");
  const std::string dataset_path = s.get<std::string>("dataset", "");
  const auto models = s.get<std::vector<std::string>>("models", {"single_gcn"});
  const auto seeds = s.get<std::vector<std::uint64_t>>("seeds", {ctx.seed});
  const bool checkpoints = s.get("checkpoints", true);
  Section sc = s.child("schedule");
  ScheduleSpec sched;
  try {
    sched.kind = parse_schedule_kind(sc.get<std::string>("kind", "joint"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train.schedule.kind: ") + e.what());
  }
  sched.gamma = sc.get("gamma", sched.gamma);
  sched.smoothing_epochs = sc.get("smoothing_epochs", sched.smoothing_epochs);
  sched.patience = sc.get("patience", sched.patience);
  sched.total_epochs = sc.get("total_epochs", sched.total_epochs);
  sched.batches_per_epoch = sc.get("batches_per_epoch", sched.batches_per_epoch);
  sched.batch_size = sc.get("batch_size", sched.batch_size);
  sched.flops_budget = sc.get("flops_budget", sched.flops_budget);
  sched.partial_smoothing = sc.get("partial_smoothing", sched.partial_smoothing);
  sc.finish();
  s.finish();
  if (dataset_path.empty()) throw ConfigError("train.dataset: path to a generated dataset is required");
  if (models.empty() || seeds.empty()) throw ConfigError("train: models and seeds must not be empty");
  if (sched.gamma < 0 || sched.smoothing_epochs <= 0 || sched.patience <= 0 || sched.total_epochs < 0 ||
      sched.batches_per_epoch <= 0 || sched.batch_size <= 0)
    throw ConfigError("train.schedule: counts must be positive");
  const auto& names = table_model_names();
  for (const auto& m : models)
    if (std::find(names.begin(), names.end(), m) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw ConfigError("train.models: unknown model '" + m + "'; valid names: " + list);
    }
  if (!fs::exists(fs::path(dataset_path) / "manifest.json"))
    throw ConfigError("train.dataset: no dataset manifest in '" + dataset_path + "'");

  const Dataset data = load_dataset(dataset_path);
  const auto geom = data.manifest.at("geometry");
  const int rings = geom.at("n_rings").get<int>();
  if (geom.at("k").get<int>() != 13 || geom.at("offset").get<int>() != 3)
    throw ConfigError("train.dataset: table models expect a Tube(R,13,3) dataset");
  const Hierarchy h = microtubule_hierarchy(rings, ctx.threads);

  std::vector<TrainingData> per_seed;
  for (auto seed : seeds) per_seed.push_back(prepare_training_data(data, seed));
  struct Cell {
    std::string model;
    std::size_t seed_index;
    RunRecord record;
  };
  std::vector<Cell> cells;
  for (const auto& m : models)
    for (std::size_t i = 0; i < seeds.size(); ++i) cells.push_back({m, i, {}});

  const fs::path runs_dir = ctx.out / "runs";
  fs::create_directories(runs_dir);
  parallel_for(cells.size(), ctx.threads, [&](std::size_t i) {
    Cell& c = cells[i];
    const std::uint64_t seed = seeds[c.seed_index];
    Model model(build_from_table(c.model, h), data.features, mix64(seed));
    c.record = train(model, per_seed[c.seed_index], sched, seed);
    const std::string tag = c.model + "_seed" + std::to_string(seed);
    std::ofstream os(runs_dir / (tag + ".csv"));
    write_run_csv(os, c.record);
    json detail = {{"model", c.model},
                   {"seed", seed},
                   {"schedule", c.record.schedule},
                   {"level_sequence", c.record.level_sequence()},
                   {"stage_starts", c.record.stage_starts},
                   {"aborted", c.record.aborted},
                   {"abort_reason", c.record.abort_reason},
                   {"best_val_nmse", c.record.best_val()}};
    std::ofstream js(runs_dir / (tag + ".json"));
    js << detail.dump(2) << '\n';
    if (checkpoints)
      save_checkpoint(ctx.out / "checkpoints" / tag, model,
                      {{"normalization", to_json(per_seed[c.seed_index].normalization)}});
  });

  std::vector<RunRecord> records;
  for (const auto& c : cells) records.push_back(c.record);
  const auto summary = summarize(records);
  {
    std::ofstream os(ctx.out / "summary.csv");
    write_summary_csv(os, summary);
  }
  write_manifest(ctx, "train", {{"dataset", dataset_path}, {"hierarchy_distances", h.distances}});
  for (const auto& r : summary)
    out << r.model << " best validation NMSE " << format_double(r.mean) << " +/- " << format_double(r.stddev)
        << " (min " << format_double(r.min) << ", " << r.runs << " runs)\n";
  for (const auto& c : cells)
    if (c.record.aborted) throw NumericalFailure(c.model + ": " + c.record.abort_reason);
  return kExitOk;
}

// ---------------------------------------------------------------- flops

int cmd_flops(Context& ctx, const std::string& model_flag, bool out_given, std::ostream& out) {
  Section s = section(ctx, "flops");
  std::string name = s.get<std::string>("model", "single_gcn");
  const int rings = s.get("fine_rings", 48);
  const auto features = s.get<std::size_t>("in_features", 10);
  const auto batch = s.get<std::size_t>("batch", 1);
  s.finish();
  if (!model_flag.empty()) name = model_flag;
  if (features == 0 || batch == 0) throw ConfigError("flops: in_features and batch must be positive");
  const Hierarchy h = microtubule_hierarchy(rings, ctx.threads, false);
  ModelSpec spec;
  try {
    spec = build_from_table(name, h);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const Model model(std::move(spec), features, 0);
  const auto costs = predicted_layer_costs(model, batch);
  std::ostringstream table;
  table << "level,layer,category,flops\n";
  std::uint64_t total = 0;
  for (const auto& c : costs) {
    table << c.level << ',' << c.layer << ',' << to_string(c.category) << ',' << c.flops << '\n';
    total += c.flops;
  }
  table << "all,total,forward," << total << '\n';
  out << table.str();
  if (out_given) {
    fs::create_directories(ctx.out);
    std::ofstream os(ctx.out / "flops.csv");
    os << table.str();
    write_manifest(ctx, "flops", {{"model", name}, {"forward_flops", total}});
  }
  return kExitOk;
}

}  // namespace

Graph parse_graph(const std::string& spec) {
  auto body = [&](std::size_t prefix) { return spec.substr(prefix); };
  try {
    if (spec.rfind("tube:", 0) == 0) {
      const std::string b = body(5);
      std::vector<std::string> parts;
      std::stringstream ss(b);
      std::string item;
      while (std::getline(ss, item, ',')) parts.push_back(item);
      if (parts.size() != 3 && parts.size() != 4) throw ConfigError("bad graph spec '" + spec + "'");
      const auto v = parse_ints(parts[0] + "," + parts[1] + "," + parts[2], spec);
      double w = 1.0;
      if (parts.size() == 4) {
        const auto r = std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), w);
        if (r.ec != std::errc() || r.ptr != parts[3].data() + parts[3].size())
          throw ConfigError("bad graph spec '" + spec + "'");
      }
      return make_tube(v[0], v[1], v[2], w);
    }
    if (spec.rfind("grid:", 0) == 0) {
      const auto v = parse_ints(body(5), spec);
      if (v.size() != 2) throw ConfigError("bad graph spec '" + spec + "'");
      return make_grid(v[0], v[1]);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("graph '" + spec + "': " + e.what());
  }
  std::ifstream is(spec);
  if (!is) throw ConfigError("cannot open graph file '" + spec + "'");
  try {
    return read_edge_list(is, fs::path(spec).filename().string());
  } catch (const std::exception& e) {
    throw ConfigError("graph file '" + spec + "': " + e.what());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiscale graph networks: data generation, graph distances and training"};
  app.name("gpcn");
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config_path, "JSON experiment config");
  app.add_option("--seed", common.seed, "Seed (overrides the config)");
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--format", common.format, "Dataset format")->check(CLI::IsMember({"csv", "bin"}));
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* generate = app.add_subcommand("generate", "Simulate the microtubule dataset");
  GddFlags gf;
  auto* gdd_cmd = app.add_subcommand("gdd", "Distance and prolongation between two graphs");
  gdd_cmd->add_option("--coarse", gf.coarse, "Coarse graph: tube:n,k,p[,w] | grid:r,c | edge-list file");
  gdd_cmd->add_option("--fine", gf.fine, "Fine graph");
  gdd_cmd->add_option("--alpha", gf.alpha, "Scale parameter");
  auto* search = app.add_subcommand("coarse-search", "Distances from a fine graph to candidate tubes");
  auto* limit = app.add_subcommand("limit-curve", "Tube and grid distance curves");
  auto* train_cmd = app.add_subcommand("train", "Train table models on a generated dataset");
  std::string model_flag;
  auto* flops = app.add_subcommand("flops", "Predicted forward cost per layer");
  flops->add_option("--model", model_flag, "Model name");
  for (auto* sub : {generate, gdd_cmd, search, limit, train_cmd, flops}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "gpcn: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    Context ctx = load_context(common);
    if (*generate) return cmd_generate(ctx, out);
    if (*gdd_cmd) return cmd_gdd(ctx, gf, out);
    if (*search) return cmd_coarse_search(ctx, out);
    if (*limit) return cmd_limit_curve(ctx, out);
    if (*train_cmd) return cmd_train(ctx, out);
    if (*flops) return cmd_flops(ctx, model_flag, !common.out.empty(), out);
  } catch (const ConfigError& e) {
    err << "gpcn: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalFailure& e) {
    err << "gpcn: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConvergenceError& e) {
    err << "gpcn: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const sim::SimulationDiverged& e) {
    err << "gpcn: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "gpcn: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "gpcn: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace gpcn::cli
