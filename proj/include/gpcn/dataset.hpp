#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpcn/linalg.hpp"
#include "gpcn/simulator.hpp"

namespace gpcn {

struct Dataset {
  std::size_t n = 0;
  std::size_t features = 0;
  std::vector<std::string> columns;
  std::vector<Matrix> x;  // per frame, n x features
  std::vector<Matrix> y;  // per frame, n x 1
  std::vector<std::size_t> run_of_frame;
  nlohmann::json manifest = nlohmann::json::object();

  std::size_t size() const { return x.size(); }
};

// Strength grid: every combination of the listed values for the varied
// parameters; the others stay at `fixed`.
struct ParamGrid {
  std::vector<sim::Strength> varied;
  std::vector<double> values;
  double fixed = 1.0;

  std::vector<sim::Strengths> combinations() const;
};

ParamGrid desk_grid();   // LatAssoc x LongAssoc over {0.1, 1.0, 1.9}
ParamGrid full_grid();  // all five over {.1,.3,.6,1.0,1.3,1.6,1.9}

struct GenerateOptions {
  sim::GeometryOptions geometry{12, 13, 3};
  sim::SimConfig base;  // field strengths are replaced per run; boundary filled if empty
  ParamGrid grid = desk_grid();
  std::uint64_t seed = 0;
  int threads = 1;
};

// Runs one simulation per grid point. Diverged runs are excluded and listed
// under manifest["failed_runs"].
Dataset generate_dataset(const GenerateOptions& options);

// Per-feature z-scores pooled over frames and nodes. Constant columns keep
// std 1 so that they map to zero.
struct Normalization {
  std::vector<double> x_mean, x_std;
  double y_mean = 0.0, y_std = 1.0;
};

Normalization fit_normalization(const Dataset& d, std::span<const std::size_t> frames);
Matrix normalize_x(const Normalization& nrm, const Matrix& x);
Matrix normalize_y(const Normalization& nrm, const Matrix& y);
nlohmann::json to_json(const Normalization& nrm);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
// Uniform 80/20 split over frames; depends only on (seed, size).
Split split_frames(std::size_t count, std::uint64_t seed, double train_fraction = 0.8);

enum class DataFormat { csv, bin };
DataFormat parse_format(const std::string& s);

// Writes x/y tensors and manifest.json into dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& d, DataFormat format);
Dataset load_dataset(const std::filesystem::path& dir);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace gpcn
