#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpcn/ensemble.hpp"
#include "gpcn/linalg.hpp"

namespace gpcn {

// Packed little-endian doubles, row-major, back to back.
void write_matrices(const std::filesystem::path& path, const std::vector<const Matrix*>& mats);
// Reads matrices of the given shapes; throws if the file size disagrees.
std::vector<Matrix> read_matrices(const std::filesystem::path& path,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& shapes);

// Writes params.bin, prolongations.bin and checkpoint.json into dir. `extra`
// is stored under "config".
void save_checkpoint(const std::filesystem::path& dir, const Model& model,
                     const nlohmann::json& extra = nlohmann::json::object());
// Overwrites the parameters of a model built from the same spec.
void load_checkpoint(const std::filesystem::path& dir, Model& model);

nlohmann::json model_manifest(const Model& model);

}  // namespace gpcn
