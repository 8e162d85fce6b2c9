#include "gpcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gpcn/checkpoint.hpp"
#include "gpcn/parallel.hpp"
#include "gpcn/rng.hpp"

namespace gpcn {

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::runtime_error("bad number '" + std::string(s) + "' in " + where);
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto c = line.find(',', start);
    out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

nlohmann::json strengths_json(const sim::Strengths& s) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < sim::kStrengthCount; ++i) j[sim::to_string(static_cast<sim::Strength>(i))] = s[i];
  return j;
}

}  // namespace

std::vector<sim::Strengths> ParamGrid::combinations() const {
  if (values.empty()) throw std::invalid_argument("parameter grid has no values");
  std::vector<sim::Strengths> out;
  sim::Strengths base;
  base.fill(fixed);
  std::vector<std::size_t> idx(varied.size(), 0);
  while (true) {
    sim::Strengths s = base;
    for (std::size_t v = 0; v < varied.size(); ++v) s[static_cast<std::size_t>(varied[v])] = values[idx[v]];
    out.push_back(s);
    // Odometer with the last varied parameter fastest.
    std::size_t v = varied.size();
    while (v > 0) {
      --v;
      if (++idx[v] < values.size()) break;
      idx[v] = 0;
      if (v == 0) return out;
    }
    if (varied.empty()) return out;
  }
}

ParamGrid desk_grid() {
  return {{sim::Strength::lat_assoc, sim::Strength::long_assoc}, {0.1, 1.0, 1.9}, 1.0};
}

ParamGrid full_grid() {
  return {{sim::Strength::lat_assoc, sim::Strength::long_assoc, sim::Strength::lat_angle,
           sim::Strength::long_angle, sim::Strength::quad_angles},
          {0.1, 0.3, 0.6, 1.0, 1.3, 1.6, 1.9},
          1.0};
}

Dataset generate_dataset(const GenerateOptions& o) {
  const sim::MtModel model = sim::build_geometry(o.geometry);
  sim::SimConfig base = o.base;
  if (base.clamp_set.empty() && base.forced_set.empty()) sim::default_boundary(model, base);
  const auto combos = o.grid.combinations();
  for (const auto& s : combos)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!(s[i] > 0.0) || !std::isfinite(s[i]))
        throw std::invalid_argument(std::string("strength ") + sim::to_string(static_cast<sim::Strength>(i)) +
                                    " must be positive");

  std::vector<std::vector<sim::Frame>> runs(combos.size());
  std::vector<std::string> failures(combos.size());
  const Rng root(o.seed);
  parallel_for(combos.size(), o.threads, [&](std::size_t r) {
    sim::SimConfig c = base;
    c.field.strengths = combos[r];
    c.seed = root.fork(r).next_u64();
    try {
      runs[r] = sim::run_simulation(model, c);
    } catch (const sim::SimulationDiverged& e) {
      failures[r] = e.what();
    }
  });

  Dataset d;
  d.n = model.n;
  d.columns = sim::frame_columns(base.eleven_columns);
  d.features = d.columns.size();
  nlohmann::json run_list = nlohmann::json::array();
  nlohmann::json failed = nlohmann::json::array();
  for (std::size_t r = 0; r < combos.size(); ++r) {
    if (!failures[r].empty()) {
      failed.push_back({{"run", r}, {"strengths", strengths_json(combos[r])}, {"error", failures[r]}});
      continue;
    }
    run_list.push_back({{"run", r}, {"strengths", strengths_json(combos[r])}, {"frames", runs[r].size()}});
    for (auto& f : runs[r]) {
      d.x.push_back(std::move(f.x));
      d.y.push_back(std::move(f.y));
      d.run_of_frame.push_back(r);
    }
  }
  const sim::SimConfig& c = base;
  d.manifest = {
      {"n", d.n},
      {"features", d.features},
      {"frames", d.x.size()},
      {"columns", d.columns},
      {"seed", o.seed},
      {"geometry",
       {{"n_rings", o.geometry.n_rings},
        {"k", o.geometry.k},
        {"offset", o.geometry.offset},
        {"long_spacing_nm", o.geometry.long_spacing},
        {"lateral_length_nm", o.geometry.lateral_length},
        {"radius_nm", model.radius}}},
      {"simulation",
       {{"ramp_steps", c.ramp_steps},
        {"hold_steps", c.hold_steps},
        {"dt_ns", c.dt},
        {"save_every", c.save_every},
        {"max_force_pN", c.max_force},
        {"langevin", c.langevin},
        {"kT_zJ", sim::effective_temperature(model, c)},
        {"damping_steps", c.damping_steps},
        {"bond_unit", c.field.bond_unit},
        {"angle_unit", c.field.angle_unit},
        {"mass_ag", model.mass}}},
      {"runs", run_list},
      {"failed_runs", failed},
      {"run_of_frame", d.run_of_frame},
  };
  return d;
}

Normalization fit_normalization(const Dataset& d, std::span<const std::size_t> frames) {
  if (frames.empty()) throw std::invalid_argument("fit_normalization: no frames");
  Normalization nrm;
  nrm.x_mean.assign(d.features, 0.0);
  nrm.x_std.assign(d.features, 0.0);
  const double count = static_cast<double>(frames.size() * d.n);
  double ysum = 0.0;
  for (std::size_t f : frames)
    for (std::size_t i = 0; i < d.n; ++i) {
      for (std::size_t c = 0; c < d.features; ++c) nrm.x_mean[c] += d.x.at(f)(i, c);
      ysum += d.y.at(f)(i, 0);
    }
  for (double& m : nrm.x_mean) m /= count;
  nrm.y_mean = ysum / count;
  double yss = 0.0;
  for (std::size_t f : frames)
    for (std::size_t i = 0; i < d.n; ++i) {
      for (std::size_t c = 0; c < d.features; ++c) {
        const double t = d.x[f](i, c) - nrm.x_mean[c];
        nrm.x_std[c] += t * t;
      }
      const double t = d.y[f](i, 0) - nrm.y_mean;
      yss += t * t;
    }
  auto finish = [&](double ss, double mean) {
    const double sd = std::sqrt(ss / count);
    return sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  };
  for (std::size_t c = 0; c < d.features; ++c) nrm.x_std[c] = finish(nrm.x_std[c], nrm.x_mean[c]);
  nrm.y_std = finish(yss, nrm.y_mean);
  return nrm;
}

Matrix normalize_x(const Normalization& nrm, const Matrix& x) {
  if (x.cols() != nrm.x_mean.size()) throw DimensionError("normalize_x: feature count mismatch");
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) = (out(i, c) - nrm.x_mean[c]) / nrm.x_std[c];
  return out;
}

Matrix normalize_y(const Normalization& nrm, const Matrix& y) {
  Matrix out = y;
  for (double& v : out.values()) v = (v - nrm.y_mean) / nrm.y_std;
  return out;
}

nlohmann::json to_json(const Normalization& nrm) {
  return {{"x_mean", nrm.x_mean}, {"x_std", nrm.x_std}, {"y_mean", nrm.y_mean}, {"y_std", nrm.y_std}};
}

Split split_frames(std::size_t count, std::uint64_t seed, double train_fraction) {
  if (count < 2) throw std::invalid_argument("split_frames: need at least two frames");
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix64(seed ^ 0x5eedf00dULL));
  rng.shuffle(std::span(idx));
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(count)));
  n_train = std::clamp<std::size_t>(n_train, 1, count - 1);
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

DataFormat parse_format(const std::string& s) {
  if (s == "csv") return DataFormat::csv;
  if (s == "bin") return DataFormat::bin;
  throw std::invalid_argument("unknown format '" + s + "' (expected csv or bin)");
}

void save_dataset(const std::filesystem::path& dir, const Dataset& d, DataFormat format) {
  std::filesystem::create_directories(dir);
  nlohmann::json m = d.manifest;
  m["n"] = d.n;
  m["features"] = d.features;
  m["frames"] = d.x.size();
  m["columns"] = d.columns;
  m["run_of_frame"] = d.run_of_frame;
  m["format"] = format == DataFormat::csv ? "csv" : "bin";
  if (format == DataFormat::bin) {
    std::vector<const Matrix*> xs, ys;
    for (const auto& x : d.x) xs.push_back(&x);
    for (const auto& y : d.y) ys.push_back(&y);
    write_matrices(dir / "x.bin", xs);
    write_matrices(dir / "y.bin", ys);
  } else {
    std::ofstream xo(dir / "x.csv");
    std::ofstream yo(dir / "y.csv");
    xo << "frame,node";
    for (const auto& c : d.columns) xo << ',' << c;
    xo << '\n';
    yo << "frame,node,energy\n";
    for (std::size_t f = 0; f < d.x.size(); ++f)
      for (std::size_t i = 0; i < d.n; ++i) {
        xo << f << ',' << i;
        for (std::size_t c = 0; c < d.features; ++c) xo << ',' << format_double(d.x[f](i, c));
        xo << '\n';
        yo << f << ',' << i << ',' << format_double(d.y[f](i, 0)) << '\n';
      }
    if (!xo || !yo) throw std::runtime_error("failed writing dataset CSV in " + dir.string());
  }
  std::ofstream mo(dir / "manifest.json");
  mo << m.dump(2) << '\n';
  if (!mo) throw std::runtime_error("failed writing " + (dir / "manifest.json").string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream mi(dir / "manifest.json");
  if (!mi) throw std::runtime_error("cannot open " + (dir / "manifest.json").string());
  Dataset d;
  d.manifest = nlohmann::json::parse(mi);
  d.n = d.manifest.at("n").get<std::size_t>();
  d.features = d.manifest.at("features").get<std::size_t>();
  d.columns = d.manifest.at("columns").get<std::vector<std::string>>();
  d.run_of_frame = d.manifest.at("run_of_frame").get<std::vector<std::size_t>>();
  const auto frames = d.manifest.at("frames").get<std::size_t>();
  if (d.columns.size() != d.features || d.run_of_frame.size() != frames)
    throw std::runtime_error("inconsistent dataset manifest in " + dir.string());
  if (d.manifest.at("format") == "bin") {
    d.x = read_matrices(dir / "x.bin", std::vector(frames, std::pair{d.n, d.features}));
    d.y = read_matrices(dir / "y.bin", std::vector(frames, std::pair{d.n, std::size_t{1}}));
    return d;
  }
  d.x.assign(frames, Matrix(d.n, d.features));
  d.y.assign(frames, Matrix(d.n, 1));
  auto read_csv = [&](const std::filesystem::path& p, std::size_t cols, std::vector<Matrix>& out) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("cannot open " + p.string());
    std::string line;
    std::getline(is, line);
    std::size_t rows = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto parts = split_commas(line);
      if (parts.size() != cols + 2) throw std::runtime_error("wrong column count in " + p.string());
      const auto f = static_cast<std::size_t>(parse_double(parts[0], p.string()));
      const auto i = static_cast<std::size_t>(parse_double(parts[1], p.string()));
      if (f >= frames || i >= d.n) throw std::runtime_error("index out of range in " + p.string());
      for (std::size_t c = 0; c < cols; ++c) out[f](i, c) = parse_double(parts[c + 2], p.string());
      ++rows;
    }
    if (rows != frames * d.n) throw std::runtime_error("row count mismatch in " + p.string());
  };
  read_csv(dir / "x.csv", d.features, d.x);
  read_csv(dir / "y.csv", 1, d.y);
  return d;
}

}  // namespace gpcn
