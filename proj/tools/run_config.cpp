#include "run_config.hpp"

#include <set>

#include "plard/error.hpp"
#include "plard/file_io.hpp"

namespace plard::cli {
namespace {

using nlohmann::json;

void reject_unknown(const json& doc, const std::set<std::string>& known, const std::string& where) {
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (!known.count(key)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
void read_array5(const json& doc, const char* key, std::array<T, kStages>& out) {
  if (!doc.contains(key)) return;
  std::vector<T> v;
  read(doc, key, v);
  if (v.size() != kStages)
    throw Error(ErrorCode::InvalidConfig, std::string("'") + key + "' needs exactly 5 entries");
  std::copy(v.begin(), v.end(), out.begin());
}

void read_stream(const json& doc, StreamConfig& s) {
  read_array5(doc, "stage_channels", s.stage_channels);
  read(doc, "lidar_divisor", s.lidar_divisor);
  read(doc, "fusion_channels", s.fusion_channels);
  read_array5(doc, "lidar_dilation", s.lidar_dilation);
}

void read_input_mode(const json& doc, ModelConfig& m) {
  if (!doc.contains("input_mode")) return;
  std::string mode;
  read(doc, "input_mode", mode);
  try {
    m.input = lidar_input_from_string(mode);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  reject_unknown(doc,
                 {"train_dir", "val_dir", "test_dir", "output_dir", "epochs", "lr_start", "lr_end", "poly_power",
                  "momentum", "weight_decay", "lambda", "loss_weights", "seed", "stage_channels", "lidar_divisor",
                  "fusion_channels", "lidar_dilation", "input_mode", "use_fsa", "brightness_augment",
                  "brightness_range", "bev", "bev_grid", "synth", "ablation_seeds"},
                 "run config");
  RunConfig c;
  read(doc, "train_dir", c.train_dir);
  read(doc, "val_dir", c.val_dir);
  read(doc, "test_dir", c.test_dir);
  read(doc, "output_dir", c.output_dir);
  read(doc, "epochs", c.train.epochs);
  read(doc, "lr_start", c.train.lr_start);
  read(doc, "lr_end", c.train.lr_end);
  read(doc, "poly_power", c.train.poly_power);
  read(doc, "momentum", c.train.momentum);
  read(doc, "weight_decay", c.train.weight_decay);
  read(doc, "lambda", c.model.lambda);
  if (doc.contains("loss_weights")) {
    const auto& w = doc.at("loss_weights");
    reject_unknown(w, {"parsing", "lidar", "aux"}, "loss_weights");
    read(w, "parsing", c.train.weights.parsing);
    read(w, "lidar", c.train.weights.lidar);
    read(w, "aux", c.train.weights.aux);
  }
  read(doc, "seed", c.train.seed);
  c.model.seed = c.train.seed;
  read_stream(doc, c.model.stream);
  read_input_mode(doc, c.model);
  c.model.use_fsa = c.model.input != LidarInput::None;
  read(doc, "use_fsa", c.model.use_fsa);
  read(doc, "brightness_augment", c.train.brightness_augment);
  read(doc, "brightness_range", c.train.brightness_range);
  read(doc, "bev", c.bev);
  if (doc.contains("bev_grid")) {
    const auto& g = doc.at("bev_grid");
    reject_unknown(g, {"x_near", "x_far", "y_right", "y_left", "resolution"}, "bev_grid");
    read(g, "x_near", c.bev_grid.x_near);
    read(g, "x_far", c.bev_grid.x_far);
    read(g, "y_right", c.bev_grid.y_right);
    read(g, "y_left", c.bev_grid.y_left);
    read(g, "resolution", c.bev_grid.resolution);
  }
  if (doc.contains("synth")) {
    const auto& s = doc.at("synth");
    reject_unknown(s, {"train_count", "test_count", "corruption", "width", "height"}, "synth");
    read(s, "train_count", c.synth.train_count);
    read(s, "test_count", c.synth.test_count);
    read(s, "corruption", c.synth.corruption);
    read(s, "width", c.synth.width);
    read(s, "height", c.synth.height);
  }
  read(doc, "ablation_seeds", c.ablation_seeds);

  c.train.validate();
  c.model.stream.validate();
  if (c.model.lambda < 0.0) throw Error(ErrorCode::InvalidConfig, "lambda must be >= 0");
  if (c.model.use_fsa && c.model.input == LidarInput::None)
    throw Error(ErrorCode::InvalidConfig, "use_fsa needs a LiDAR input_mode");
  if (c.output_dir.empty()) throw Error(ErrorCode::InvalidConfig, "output_dir must not be empty");
  if (!(c.bev_grid.resolution > 0.0) || c.bev_grid.x_far <= c.bev_grid.x_near || c.bev_grid.y_left <= c.bev_grid.y_right)
    throw Error(ErrorCode::InvalidConfig, "bev_grid extents are empty");
  if (c.synth.train_count < 1 || c.synth.test_count < 1 || c.synth.corruption < 0.0 || c.synth.corruption > 1.0 ||
      c.synth.width % 16 != 0 || c.synth.height % 16 != 0 || c.synth.width <= 0 || c.synth.height <= 0)
    throw Error(ErrorCode::InvalidConfig, "synth needs positive counts, corruption in [0,1], sizes divisible by 16");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json doc;
  const std::string text = read_file_text(path);
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

nlohmann::json model_config_to_json(const ModelConfig& config) {
  const auto& s = config.stream;
  return {{"stage_channels", s.stage_channels}, {"lidar_divisor", s.lidar_divisor},
          {"fusion_channels", s.fusion_channels}, {"lidar_dilation", s.lidar_dilation},
          {"input_mode", to_string(config.input)}, {"use_fsa", config.use_fsa},
          {"lambda", config.lambda}, {"seed", config.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  reject_unknown(doc, {"stage_channels", "lidar_divisor", "fusion_channels", "lidar_dilation", "input_mode", "use_fsa",
                       "lambda", "seed"},
                 "model config");
  ModelConfig m;
  read_stream(doc, m.stream);
  read_input_mode(doc, m);
  read(doc, "use_fsa", m.use_fsa);
  read(doc, "lambda", m.lambda);
  read(doc, "seed", m.seed);
  m.stream.validate();
  return m;
}

}  // namespace plard::cli
