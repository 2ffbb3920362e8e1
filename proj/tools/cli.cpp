#include <iostream>
#include <optional>

#include <omp.h>

#include "CLI11.hpp"
#include "commands.hpp"
#include "plard/error.hpp"
#include "plard/file_io.hpp"

namespace plard::cli {

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Camera/LiDAR road segmentation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "run configuration (JSON)");
  app.add_option("--seed", seed, "seed overriding the configuration");
  app.add_option("--threads", threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--verbose", verbose, "log progress to stderr");

  auto* adt = app.add_subcommand("adt", "altitude-difference image of a point cloud");
  std::string cloud, calib, adt_out;
  int width = 0, height = 0, window = 7;
  adt->add_option("--cloud", cloud)->required();
  adt->add_option("--calib", calib)->required();
  adt->add_option("--width", width)->required();
  adt->add_option("--height", height)->required();
  adt->add_option("--window", window);
  adt->add_option("--out", adt_out)->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  int count = 0, synth_w = 320, synth_h = 96;
  double corruption = 0.0;
  std::string synth_out;
  synth->add_option("--count", count)->required();
  synth->add_option("--corruption", corruption);
  synth->add_option("--width", synth_w);
  synth->add_option("--height", synth_h);
  synth->add_option("--out", synth_out)->required();

  auto* train = app.add_subcommand("train", "train a model from --config");

  auto* infer = app.add_subcommand("infer", "write road probability PNGs");
  std::string checkpoint, scenes, infer_out;
  infer->add_option("--checkpoint", checkpoint)->required();
  infer->add_option("--scenes", scenes)->required();
  infer->add_option("--out", infer_out)->required();

  auto* eval = app.add_subcommand("eval", "score prediction PNGs against ground truth");
  std::string pred_dir, gt_dir, report_path;
  bool bev = false;
  eval->add_option("--pred", pred_dir)->required();
  eval->add_option("--gt", gt_dir)->required();
  eval->add_flag("--bev", bev, "evaluate in bird's-eye view");
  eval->add_option("--out", report_path, "also write the report here");

  auto* overlay = app.add_subcommand("overlay", "blend a road probability map over an image");
  std::string image, pred, overlay_out;
  double alpha = 0.6;
  overlay->add_option("--image", image)->required();
  overlay->add_option("--pred", pred)->required();
  overlay->add_option("--out", overlay_out)->required();
  overlay->add_option("--alpha", alpha);

  auto* ablate = app.add_subcommand("ablate", "train and compare the four fusion variants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidation;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    Context ctx{verbose, &out, &err};
    auto run_config = [&]() {
      RunConfig c = config_path.empty() ? parse_run_config(nlohmann::json::object()) : load_run_config(config_path);
      if (seed) {
        c.train.seed = *seed;
        c.model.seed = *seed;
      }
      return c;
    };
    if (*adt) {
      const auto r = cmd_adt(cloud, calib, width, height, window, adt_out);
      out << nlohmann::json{{"max_value", r.max_value}, {"occupied_pixels", r.occupied}}.dump() << "\n";
    } else if (*synth) {
      cmd_synth(count, seed.value_or(0), corruption, synth_w, synth_h, synth_out);
      out << nlohmann::json{{"scenes", count}, {"out", synth_out}}.dump() << "\n";
    } else if (*train) {
      if (config_path.empty()) throw Error(ErrorCode::InvalidConfig, "train needs --config");
      const auto r = cmd_train(run_config(), ctx);
      out << nlohmann::json{{"best_epoch", r.best_epoch}, {"best_val_max_f", r.best_val_max_f},
                            {"final_loss", r.log.back().mean_loss}}
                 .dump()
          << "\n";
    } else if (*infer) {
      const auto seconds = cmd_infer(checkpoint, scenes, infer_out);
      out << nlohmann::json{{"scenes", seconds.size()}, {"out", infer_out}}.dump() << "\n";
    } else if (*eval) {
      const BevGrid grid = config_path.empty() ? BevGrid{} : run_config().bev_grid;
      const auto report = to_json(cmd_eval(pred_dir, gt_dir, bev, grid));
      if (!report_path.empty()) write_file_text(report_path, report.dump(2) + "\n");
      out << report.dump(2) << "\n";
    } else if (*overlay) {
      cmd_overlay(image, pred, overlay_out, alpha);
    } else if (*ablate) {
      if (config_path.empty()) throw Error(ErrorCode::InvalidConfig, "ablate needs --config");
      const auto table = cmd_ablate(run_config(), ctx);
      out << ablation_markdown(table);
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace plard::cli
