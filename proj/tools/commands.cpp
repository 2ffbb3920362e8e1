#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "plard/error.hpp"
#include "plard/file_io.hpp"
#include "plard/pipeline.hpp"

namespace plard::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::Io, std::string(what) + " '" + path + "' is not a readable file");
}

void require_dir(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) throw Error(ErrorCode::Io, std::string(what) + " '" + path + "' is not a directory");
}

void ensure_output_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path)) throw Error(ErrorCode::Io, "cannot create output directory '" + path + "'");
}

void ensure_parent_dir(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  if (!parent.empty()) ensure_output_dir(parent.string());
}

std::vector<SceneBundle> load_dataset(const std::string& dir) {
  std::vector<SceneBundle> scenes;
  for (const auto& d : resolve_scene_dirs(dir)) scenes.push_back(load_scene(d));
  if (scenes.empty()) throw Error(ErrorCode::EmptyDataset, "no scenes under '" + dir + "'");
  return scenes;
}

void write_bytes(const std::string& path, const std::vector<std::byte>& bytes) {
  write_file_bytes(path, std::span<const std::byte>(bytes.data(), bytes.size()));
}

json log_to_json(const TrainResult& r) {
  json epochs = json::array();
  for (const auto& e : r.log)
    epochs.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"mean_loss", e.mean_loss}, {"val_max_f", e.val_max_f}});
  return {{"epochs", epochs}, {"best_epoch", r.best_epoch}, {"best_val_max_f", r.best_val_max_f}};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<double> time_inference(const PlardModel& model, std::span<const Sample> samples) {
  std::vector<double> seconds;
  for (const auto& s : samples) {
    const auto t0 = std::chrono::steady_clock::now();
    (void)predict(model, s);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return seconds;
}

struct Variant {
  const char* name;
  LidarInput input;
  bool fsa;
};

constexpr Variant kVariants[] = {{"Img", LidarInput::None, false},
                                 {"Img+L-Proj", LidarInput::Projection, false},
                                 {"Img+L-ADT", LidarInput::Adt, false},
                                 {"Img+L-ADT+FSA", LidarInput::Adt, true}};

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::TruncatedRecord:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::MissingKey:
    case ErrorCode::WrongArity: return kIo;
    case ErrorCode::Numerical: return kNumerical;
    default: return kValidation;
  }
}

std::vector<std::string> resolve_scene_dirs(const std::string& path) {
  require_dir(path, "scene path");
  if (fs::exists(fs::path(path) / "image.png")) return {path};
  std::vector<std::string> dirs;
  for (const auto& id : list_scenes(path)) dirs.push_back((fs::path(path) / id).string());
  return dirs;
}

std::string model_sidecar_path(const std::string& checkpoint) { return checkpoint + ".json"; }

AdtResult cmd_adt(const std::string& cloud_path, const std::string& calib_path, int width, int height, int window,
                  const std::string& out_png) {
  require_file(cloud_path, "point cloud");
  require_file(calib_path, "calibration");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidConfig, "width and height must be positive");
  ensure_parent_dir(out_png);
  const auto cloud = load_point_cloud(cloud_path);
  const auto calib = load_calibration(calib_path);
  const auto points = project(cloud, calib, width, height);
  const auto map = rasterize_altitude(points, width, height);
  const auto adt = adt_transform(map, window);
  Image8 png(width, height, 1);
  png.pixels = adt.rescaled;
  save_png(png, out_png);
  AdtResult r{adt.max_value, map.occupied_count()};
  const json sidecar{{"max_value", r.max_value}, {"occupied_pixels", r.occupied}, {"window", window},
                     {"width", width},           {"height", height}};
  write_file_text(out_png + ".json", sidecar.dump(2) + "\n");
  return r;
}

void cmd_synth(int count, std::uint64_t seed, double corruption, int width, int height, const std::string& out_dir) {
  if (count < 1) throw Error(ErrorCode::InvalidConfig, "count must be >= 1");
  ensure_output_dir(out_dir);
  const auto scenes = generate_dataset(count, seed, corruption, default_sensor(width, height));
  write_dataset(out_dir, scenes, seed, corruption);
}

TrainResult cmd_train(const RunConfig& config, const Context& ctx) {
  if (config.train_dir.empty()) throw Error(ErrorCode::InvalidConfig, "train_dir is required");
  require_dir(config.train_dir, "train_dir");
  if (!config.val_dir.empty()) require_dir(config.val_dir, "val_dir");
  ensure_output_dir(config.output_dir);

  const auto train_scenes = load_dataset(config.train_dir);
  std::vector<SceneBundle> val_scenes;
  if (!config.val_dir.empty()) val_scenes = load_dataset(config.val_dir);
  const auto train_set = make_samples(train_scenes, config.model.input);
  const auto val_set = make_samples(val_scenes, config.model.input);

  PlardModel model(config.model);
  const auto result = train(model, train_set, val_set, config.train, [&](const EpochLog& e) {
    if (ctx.verbose && ctx.log)
      *ctx.log << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.mean_loss
               << (e.val_max_f >= 0.0 ? " val_maxf " + std::to_string(e.val_max_f) : std::string()) << "\n";
  });

  const fs::path out(config.output_dir);
  const std::string model_json = model_config_to_json(config.model).dump(2) + "\n";
  for (const auto& [name, bytes] : {std::pair{"model.ckpt", &result.best_checkpoint},
                                    std::pair{"final.ckpt", &result.final_checkpoint}}) {
    const std::string path = (out / name).string();
    write_bytes(path, *bytes);
    write_file_text(model_sidecar_path(path), model_json);
  }
  write_file_text((out / "train_log.json").string(), log_to_json(result).dump(2) + "\n");
  return result;
}

std::vector<double> cmd_infer(const std::string& checkpoint, const std::string& scenes, const std::string& out_dir) {
  require_file(checkpoint, "checkpoint");
  require_file(model_sidecar_path(checkpoint), "model config");
  const auto dirs = resolve_scene_dirs(scenes);
  ensure_output_dir(out_dir);

  json model_doc;
  try {
    model_doc = json::parse(read_file_text(model_sidecar_path(checkpoint)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad model config: ") + e.what());
  }
  PlardModel model(model_config_from_json(model_doc));
  nn::load_checkpoint(model.params(), checkpoint);

  std::vector<double> seconds;
  json timing = json::object();
  for (const auto& dir : dirs) {
    const auto sample = make_sample(load_scene(dir), model.config().input);
    const auto t0 = std::chrono::steady_clock::now();
    const auto map = predict(model, sample);
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const std::string id = fs::path(dir).filename().string();
    save_png(quantize_confidence(map), (fs::path(out_dir) / (id + ".png")).string());
  }
  timing["scenes"] = seconds.size();
  timing["median_seconds_per_image"] = median(seconds);
  write_file_text((fs::path(out_dir) / "timing.json").string(), timing.dump(2) + "\n");
  return seconds;
}

EvalReport cmd_eval(const std::string& pred_dir, const std::string& gt_dir, bool bev, const BevGrid& grid) {
  require_dir(pred_dir, "prediction directory");
  const auto dirs = resolve_scene_dirs(gt_dir);
  std::vector<CategorizedSweep> sweeps;
  for (const auto& dir : dirs) {
    const std::string id = fs::path(dir).filename().string();
    const std::string pred_path = (fs::path(pred_dir) / (id + ".png")).string();
    require_file(pred_path, "prediction");
    auto gt = decode_road_mask(load_png((fs::path(dir) / "gt.png").string()));
    auto pred = dequantize_confidence(load_png(pred_path));
    if (pred.width != gt.width || pred.height != gt.height)
      throw Error(ErrorCode::ShapeMismatch, "prediction '" + pred_path + "' does not match its ground truth size");
    if (bev) {
      const auto calib = load_calibration((fs::path(dir) / "calib.txt").string());
      const auto mapping =
          bev_from_calibration(calib, grid.x_near, grid.x_far, grid.y_right, grid.y_left, grid.resolution);
      pred = to_bev(pred, mapping);
      gt = to_bev(gt, mapping);
    }
    CategorizedSweep s;
    s.category = "all";
    const fs::path meta = fs::path(dir) / "meta.json";
    if (fs::exists(meta)) {
      try {
        s.category = json::parse(read_file_text(meta.string())).at("category").get<std::string>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, "bad meta.json in '" + dir + "': " + e.what());
      }
    }
    s.sweep.add(pred, gt);
    sweeps.push_back(std::move(s));
  }
  return aggregate(sweeps);
}

void cmd_overlay(const std::string& image_png, const std::string& pred_png, const std::string& out_png, double alpha) {
  require_file(image_png, "image");
  require_file(pred_png, "prediction");
  if (alpha < 0.0 || alpha > 1.0) throw Error(ErrorCode::InvalidConfig, "alpha must lie in [0,1]");
  ensure_parent_dir(out_png);
  const Image8 image = load_png(image_png);
  const ConfidenceMap pred = dequantize_confidence(load_png(pred_png));
  if (pred.width != image.width || pred.height != image.height)
    throw Error(ErrorCode::ShapeMismatch, "prediction and image sizes differ");
  Image8 out(image.width, image.height, 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const double a = alpha * pred.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double base = image.at(x, y, image.channels == 3 ? c : 0);
        const double tint = c == 1 ? 255.0 : 0.0;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround((1.0 - a) * base + a * tint));
      }
    }
  save_png(out, out_png);
}

json cmd_ablate(const RunConfig& config, const Context& ctx) {
  const bool from_disk = !config.train_dir.empty();
  if (from_disk) {
    require_dir(config.train_dir, "train_dir");
    if (config.test_dir.empty()) throw Error(ErrorCode::InvalidConfig, "test_dir is required with train_dir");
    require_dir(config.test_dir, "test_dir");
  }
  ensure_output_dir(config.output_dir);
  std::vector<std::uint64_t> seeds = config.ablation_seeds;
  if (seeds.empty()) seeds.push_back(config.train.seed);

  json runs = json::array();
  for (std::uint64_t seed : seeds) {
    std::vector<SceneBundle> train_scenes, test_scenes;
    if (from_disk) {
      train_scenes = load_dataset(config.train_dir);
      test_scenes = load_dataset(config.test_dir);
    } else {
      const auto sensor = default_sensor(config.synth.width, config.synth.height);
      train_scenes = generate_dataset(config.synth.train_count, seed, config.synth.corruption, sensor);
      test_scenes = generate_dataset(config.synth.test_count, seed + 0x7e57, config.synth.corruption, sensor);
    }
    json rows = json::array();
    for (const auto& v : kVariants) {
      ModelConfig mc = config.model;
      mc.input = v.input;
      mc.use_fsa = v.fsa;
      mc.seed = seed;
      TrainConfig tc = config.train;
      tc.seed = seed;
      const auto train_set = make_samples(train_scenes, v.input);
      const auto test_set = make_samples(test_scenes, v.input);
      PlardModel model(mc);
      const auto result = train(model, train_set, {}, tc);
      const auto report = evaluate_model(model, test_set);
      json row = to_json(report.overall);
      row["variant"] = v.name;
      row["seconds_per_image"] = median(time_inference(model, test_set));
      row["final_loss"] = result.log.back().mean_loss;
      rows.push_back(row);
      if (ctx.verbose && ctx.log)
        *ctx.log << "seed " << seed << " " << v.name << " MaxF " << report.overall.max_f << "\n";
    }
    runs.push_back({{"seed", seed}, {"rows", rows}});
  }
  json table{{"runs", runs}};
  // Per-variant median over seeds.
  json summary = json::array();
  for (std::size_t i = 0; i < std::size(kVariants); ++i) {
    json row{{"variant", kVariants[i].name}};
    for (const char* key : {"MaxF", "AP", "PRE", "REC", "FPR", "FNR", "seconds_per_image"}) {
      std::vector<double> values;
      for (const auto& run : runs) values.push_back(run["rows"][i][key].get<double>());
      row[key] = median(values);
    }
    summary.push_back(row);
  }
  table["median"] = summary;
  const fs::path out(config.output_dir);
  write_file_text((out / "ablation.json").string(), table.dump(2) + "\n");
  write_file_text((out / "ablation.md").string(), ablation_markdown(table));
  return table;
}

std::string ablation_markdown(const json& table) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "| Variant | MaxF | AP | PRE | REC | FPR | FNR | s/im |\n";
  os << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& row : table.at("median")) {
    os << "| " << row.at("variant").get<std::string>();
    for (const char* key : {"MaxF", "AP", "PRE", "REC", "FPR", "FNR"}) os << " | " << row.at(key).get<double>();
    os << " | " << std::setprecision(4) << row.at("seconds_per_image").get<double>() << std::setprecision(2)
       << " |\n";
  }
  return os.str();
}

}  // namespace plard::cli
