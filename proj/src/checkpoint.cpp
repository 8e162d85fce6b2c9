#include "gpcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gpcn {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian hosts");

void write_matrices(const std::filesystem::path& path, const std::vector<const Matrix*>& mats) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const Matrix* m : mats)
    os.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(double)));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Matrix> read_matrices(const std::filesystem::path& path,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& shapes) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::size_t expected = 0;
  for (const auto& [r, c] : shapes) expected += r * c * sizeof(double);
  const auto actual = std::filesystem::file_size(path);
  if (actual != expected)
    throw std::runtime_error(path.string() + " holds " + std::to_string(actual) + " bytes, expected " +
                             std::to_string(expected));
  std::vector<Matrix> out;
  for (const auto& [r, c] : shapes) {
    Matrix m(r, c);
    is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    out.push_back(std::move(m));
  }
  return out;
}

nlohmann::json model_manifest(const Model& model) {
  const ModelSpec& s = model.spec();
  nlohmann::json j;
  j["name"] = s.name;
  j["kind"] = to_string(s.kind);
  j["adaptive"] = s.adaptive;
  j["in_features"] = model.in_features();
  j["radii"] = s.radii;
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t i = 0; i < s.levels.size(); ++i)
    levels.push_back({{"nodes", model.level_nodes(i)},
                      {"structure_nnz", s.levels[i].z.nnz()},
                      {"gcn_widths", s.levels[i].gcn_widths},
                      {"dense_widths", s.levels[i].dense_widths}});
  j["levels"] = levels;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.params().items())
    params.push_back({{"name", p.name}, {"level", p.level}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  j["parameters"] = params;
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : s.prolongations) ps.push_back({{"rows", p.rows()}, {"cols", p.cols()}});
  j["prolongations"] = ps;
  return j;
}

void save_checkpoint(const std::filesystem::path& dir, const Model& model, const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  std::vector<const Matrix*> params;
  for (const auto& p : model.params().items()) params.push_back(&p.value);
  write_matrices(dir / "params.bin", params);
  std::vector<const Matrix*> ps;
  for (const auto& p : model.spec().prolongations) ps.push_back(&p);
  write_matrices(dir / "prolongations.bin", ps);
  nlohmann::json j = model_manifest(model);
  j["config"] = extra;
  std::ofstream os(dir / "checkpoint.json");
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("write failed: " + (dir / "checkpoint.json").string());
}

void load_checkpoint(const std::filesystem::path& dir, Model& model) {
  std::ifstream is(dir / "checkpoint.json");
  if (!is) throw std::runtime_error("cannot open " + (dir / "checkpoint.json").string());
  const nlohmann::json j = nlohmann::json::parse(is);
  const auto& stored = j.at("parameters");
  auto& params = model.params();
  if (stored.size() != params.size())
    throw std::runtime_error("checkpoint has " + std::to_string(stored.size()) + " tensors, model has " +
                             std::to_string(params.size()));
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = stored[i];
    if (e.at("name").get<std::string>() != params[i].name ||
        e.at("rows").get<std::size_t>() != params[i].value.rows() ||
        e.at("cols").get<std::size_t>() != params[i].value.cols())
      throw std::runtime_error("checkpoint tensor " + std::to_string(i) + " does not match " + params[i].name);
    shapes.emplace_back(params[i].value.rows(), params[i].value.cols());
  }
  auto values = read_matrices(dir / "params.bin", shapes);
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
}

}  // namespace gpcn
