#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"

namespace fs = std::filesystem;
using gpcn::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpcn_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string write_config(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("gpcn_test_cli_" + name + ".json");
  std::ofstream(p) << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kTinySim = R"("simulation": {"n_rings": 4, "ramp_steps": 100, "hold_steps": 100, "save_every": 50},
  "grid": {"varied": ["LatAssoc"], "values": [0.5, 1.5]})";

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"frobnicate"}).code, 2);
  EXPECT_EQ(call({"--help"}).code, 0);
  EXPECT_EQ(call({"--format", "xml", "flops"}).code, 2);
  EXPECT_EQ(call({"--config", "/nonexistent/x.json", "flops"}).code, 2);
}

TEST(Cli, UnknownConfigKeysAreNamed) {
  auto r = call({"--config", write_config("top", R"({"sede": 1})"), "flops"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sede"), std::string::npos);
  r = call({"--config", write_config("nested", R"({"train": {"schedule": {"gama": 2}}})"), "train"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train.schedule.gama"), std::string::npos);
  r = call({"--config", write_config("type", R"({"flops": {"fine_rings": "many"}})"), "flops"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("flops.fine_rings"), std::string::npos);
  r = call({"--config", write_config("syntax", "{"), "flops"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ValueErrorsNameTheOffendingEntry) {
  auto r = call({"--config", write_config("neg", R"({"grid": {"values": [1.0, 0.5, -1]}})"), "generate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("grid.values[2]"), std::string::npos);
  r = call({"--config", write_config("strength", R"({"grid": {"varied": ["LatAssoc", "Twist"]}})"), "generate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("grid.varied[1]"), std::string::npos);
  r = call({"flops", "--model", "gpcn9"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("single_gcn"), std::string::npos);
}

TEST(Cli, GddWritesOutputsAndIsDeterministic) {
  const fs::path a = scratch("gdd_a"), b = scratch("gdd_b");
  auto r = call({"--out", a.string(), "gdd", "--coarse", "tube:4,13,1", "--fine", "tube:8,13,3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("distance 0.31955", 0), 0u) << r.out;
  ASSERT_EQ(call({"--out", b.string(), "gdd", "--coarse", "tube:4,13,1", "--fine", "tube:8,13,3"}).code, 0);
  for (const char* f : {"P.csv", "manifest.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_EQ(call({"gdd", "--coarse", "tube:4,13", "--fine", "grid:2,2"}).code, 2);
  EXPECT_EQ(call({"gdd", "--coarse", "grid:3,3", "--fine", "grid:2,2"}).code, 2);
  EXPECT_EQ(call({"gdd", "--coarse", "grid:1,2", "--fine", "grid:1,3", "--alpha", "-1"}).code, 2);
}

TEST(Cli, GraphSpecs) {
  const fs::path p = fs::temp_directory_path() / "gpcn_test_cli_edges.txt";
  std::ofstream(p) << "# path\n3\n0 1\n1 2 2.5\n";
  const gpcn::Graph g = gpcn::cli::parse_graph(p.string());
  EXPECT_EQ(g.node_count(), 3u);
  EXPECT_EQ(g.weight(1, 2), 2.5);
  EXPECT_EQ(gpcn::cli::parse_graph("tube:4,5,1,2").weight(4, 5), 2.0);
  EXPECT_EQ(gpcn::cli::parse_graph("grid:2,3").node_count(), 6u);
  EXPECT_THROW(gpcn::cli::parse_graph("tube:4,x,1"), gpcn::cli::ConfigError);
  EXPECT_THROW(gpcn::cli::parse_graph("/nonexistent/graph"), gpcn::cli::ConfigError);
}

TEST(Cli, LimitCurveAndCoarseSearch) {
  const fs::path out = scratch("limit");
  auto r = call({"--config", write_config("limit", R"({"limit_curve": {"n": [3, 2], "k": 5}})"), "--out",
                 out.string(), "limit-curve"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream csv(slurp(out / "limit_curve.csv"));
  std::string line;
  std::vector<std::string> keys;
  while (std::getline(csv, line)) keys.push_back(line.substr(0, line.find(',', 2)));
  EXPECT_EQ(keys, (std::vector<std::string>{"n,family", "2,tube", "2,grid", "3,tube", "3,grid"}));
  const fs::path cs = scratch("search");
  r = call({"--config",
            write_config("search", R"({"coarse_search": {"fine": "tube:4,5,1", "n_rings": 2, "k": [3, 4], "p": [0, 1], "seam_weights": [1]}})"),
            "--out", cs.string(), "coarse-search"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("nearest Tube(2,"), std::string::npos);
  const std::string table = slurp(cs / "coarse_search.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
}

TEST(Cli, FlopsTable) {
  const auto r = call({"flops", "--model", "single_gcn"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("level,layer,category,flops\n0,gcn0,gcn_layer,", 0), 0u);
  EXPECT_NE(r.out.find("all,total,forward,"), std::string::npos);
}

TEST(Cli, GenerateTrainPipeline) {
  const fs::path data = scratch("data"), again = scratch("data2"), runs = scratch("runs");
  const std::string cfg = write_config("pipe", std::string("{") + kTinySim +
                                                   R"(, "train": {"dataset": ")" + data.string() +
                                                   R"(", "models": ["single_gcn", "a_gpcn2"], "seeds": [1, 2],
    "schedule": {"total_epochs": 2, "batches_per_epoch": 2, "batch_size": 2}}})");
  auto r = call({"--config", cfg, "--out", data.string(), "--seed", "5", "generate"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(call({"--config", cfg, "--out", again.string(), "--seed", "5", "generate"}).code, 0);
  EXPECT_EQ(slurp(data / "x.csv"), slurp(again / "x.csv"));
  EXPECT_EQ(slurp(data / "manifest.json"), slurp(again / "manifest.json"));
  r = call({"--config", cfg, "--out", runs.string(), "train"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(runs / "summary.csv"));
  EXPECT_TRUE(fs::exists(runs / "runs" / "a_gpcn2_seed2.csv"));
  EXPECT_TRUE(fs::exists(runs / "checkpoints" / "single_gcn_seed1" / "params.bin"));
  const fs::path bin = scratch("bin");
  ASSERT_EQ(call({"--config", cfg, "--out", bin.string(), "--format", "bin", "generate"}).code, 0);
  EXPECT_TRUE(fs::exists(bin / "x.bin"));
}

TEST(Cli, DivergedSimulationExitsNumerical) {
  const fs::path out = scratch("diverge");
  const auto cfg = write_config("diverge", R"({"simulation": {"n_rings": 3, "offset": 1, "ramp_steps": 0, "hold_steps": 1000,
    "save_every": 1000, "dt": 0.5, "langevin": false}, "grid": {"varied": [], "values": [1.0]}})");
  const auto r = call({"--config", cfg, "--out", out.string(), "generate"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, TrainRejectsMissingDataset) {
  const auto cfg = write_config("nodata", R"({"train": {"dataset": "/nonexistent/ds"}})");
  EXPECT_EQ(call({"--config", cfg, "train"}).code, 2);
}
