#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "plard/pipeline.hpp"
#include "plard/plard_net.hpp"

namespace plard {

struct TrainConfig {
  int epochs = 30;
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  double poly_power = 0.9;
  double momentum = 0.9;
  double weight_decay = 0.0;
  LossWeights weights;
  std::uint64_t seed = 0;
  /// Multiplies each training image by a factor drawn from
  /// [1 - brightness_range, 1 + brightness_range].
  bool brightness_augment = false;
  double brightness_range = 0.2;

  void validate() const;
};

/// Learning rate after `iteration` of `total` steps:
/// lr_end + (lr_start - lr_end) * (1 - iteration / total)^power.
double poly_learning_rate(const TrainConfig& config, std::int64_t iteration, std::int64_t total);

struct EpochLog {
  int epoch = 0;  // 1-based
  double lr = 0.0;  // rate of the epoch's last step
  double mean_loss = 0.0;
  double val_max_f = -1.0;  // -1 without validation data
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_max_f = -1.0;
  std::vector<std::byte> best_checkpoint;
  std::vector<std::byte> final_checkpoint;
};

/// Per-sample SGD over a seeded shuffle of `train_set`. After every epoch the
/// model is scored on `val_set`; the best-scoring parameters (the final ones
/// when `val_set` is empty) are kept as the best checkpoint. The model is
/// left holding the final parameters.
TrainResult train(PlardModel& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace plard
