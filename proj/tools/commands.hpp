#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "plard/error.hpp"
#include "plard/evalkit.hpp"
#include "run_config.hpp"

namespace plard::cli {

/// Exit statuses shared by every subcommand.
enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2, kNumerical = 3 };

int exit_code_for(ErrorCode code);

struct Context {
  bool verbose = false;
  std::ostream* out = nullptr;
  std::ostream* log = nullptr;
};

struct AdtResult {
  double max_value = 0.0;
  std::size_t occupied = 0;
};

AdtResult cmd_adt(const std::string& cloud_path, const std::string& calib_path, int width, int height, int window,
                  const std::string& out_png);
void cmd_synth(int count, std::uint64_t seed, double corruption, int width, int height, const std::string& out_dir);
/// Writes <output_dir>/model.ckpt (best by validation MaxF), final.ckpt,
/// their model-config sidecars and train_log.json.
TrainResult cmd_train(const RunConfig& config, const Context& ctx);
/// Writes <out_dir>/<scene id>.png quantized road probability maps and
/// timing.json; returns the per-scene inference seconds.
std::vector<double> cmd_infer(const std::string& checkpoint, const std::string& scenes, const std::string& out_dir);
EvalReport cmd_eval(const std::string& pred_dir, const std::string& gt_dir, bool bev, const BevGrid& grid);
void cmd_overlay(const std::string& image_png, const std::string& pred_png, const std::string& out_png,
                 double alpha = 0.6);
/// Trains the four ablation variants and returns the JSON table; also
/// writes ablation.json and ablation.md under the output directory.
nlohmann::json cmd_ablate(const RunConfig& config, const Context& ctx);
std::string ablation_markdown(const nlohmann::json& table);

/// Scene directories of a dataset root, or the directory itself when it is a
/// single scene.
std::vector<std::string> resolve_scene_dirs(const std::string& path);
std::string model_sidecar_path(const std::string& checkpoint);

/// Parses argv and runs one subcommand; never throws.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace plard::cli
