#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hrom/autoencoder.hpp"
#include "hrom/hybrid.hpp"

namespace hrom {

using json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "1.0";

/// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// %.17g
std::string fmt17(double v);

/// `traj_id,k,x0,...` rows, one per stored state.
std::string dataset_to_csv(const PoincareDataset& ds);
/// Parses the CSV form; every trajectory must hold the same number of states.
PoincareDataset dataset_from_csv(const std::string& text, const std::string& system_name);

json matrix_to_json(const Matrix& m);
json vector_to_json(const Vector& v);
Matrix matrix_from_json(const json& j);
Vector vector_from_json(const json& j);

json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const json& j);

/// Network weights, normalization and latent size; callers add metadata.
json model_to_json(const AutoencoderModel& m);
AutoencoderModel model_from_json(const json& j);

}  // namespace hrom
