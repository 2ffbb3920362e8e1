#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "plard/plard_net.hpp"
#include "plard/train.hpp"

namespace plard::cli {

/// Metric ground grid used when evaluating in bird's-eye view.
struct BevGrid {
  double x_near = 5.0;
  double x_far = 45.0;
  double y_right = -10.0;
  double y_left = 10.0;
  double resolution = 0.1;
};

/// In-memory synthetic data used by `ablate` when no dataset directories
/// are configured.
struct SynthOptions {
  int train_count = 64;
  int test_count = 32;
  double corruption = 0.7;
  int width = 160;
  int height = 48;
};

struct RunConfig {
  std::string train_dir;
  std::string val_dir;
  std::string test_dir;
  std::string output_dir = "run";
  ModelConfig model;
  TrainConfig train;
  bool bev = false;
  BevGrid bev_grid;
  SynthOptions synth;
  std::vector<std::uint64_t> ablation_seeds;  // empty: the single `seed`
};

/// Parses a run configuration; unknown keys and ill-typed values throw
/// InvalidConfig.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& doc);

}  // namespace plard::cli
