#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "hrom/autoencoder.hpp"
#include "hrom/io.hpp"
#include "hrom/roa.hpp"
#include "hrom/systems.hpp"

namespace hrom {

// Run configuration is a nested JSON object. default_config() holds every
// recognized key; user files and flags are merged on top of it.

json default_config(const std::string& system = "paddle-ball");

/// Recursively overlays `overlay` onto `base`. Keys absent from `base` and
/// type changes (other than null <-> value and int <-> float) throw InvalidInput.
json merge_config(const json& base, const json& overlay, const std::string& where = "");

/// Reads a config file; an empty path yields an empty object.
json load_config_file(const std::filesystem::path& path);

struct SystemSetup {
  std::unique_ptr<HybridSystem> system;
  BoxSampler box;
  InitSampler sampler;
  Vector fixed_point;  // pre-impact state of the periodic orbit
};

/// Builds the system named by cfg["system"] with its parameters and sampler box.
/// When `with_fixed_point` is set, also solves for the periodic orbit.
SystemSetup make_system(const json& cfg, bool with_fixed_point = false);

/// The physical-parameter block of the selected system.
json system_params(const json& cfg);

SimOptions sim_options(const json& cfg);
ModelShape model_shape(const json& cfg, int n_x);
TrainConfig train_config(const json& cfg);
LossWeights loss_weights(const json& cfg);

}  // namespace hrom
