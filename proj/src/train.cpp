#include "plard/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "plard/error.hpp"
#include "plard/optim.hpp"

namespace plard {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (!(lr_start > 0.0) || !(lr_end > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning rates must be positive");
  if (poly_power < 0.0) throw Error(ErrorCode::InvalidConfig, "poly_power must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw Error(ErrorCode::InvalidConfig, "momentum must lie in [0,1)");
  if (weight_decay < 0.0) throw Error(ErrorCode::InvalidConfig, "weight_decay must be >= 0");
  if (weights.parsing < 0.0 || weights.lidar < 0.0 || weights.aux < 0.0)
    throw Error(ErrorCode::InvalidConfig, "loss weights must be >= 0");
  if (brightness_range < 0.0 || brightness_range >= 1.0)
    throw Error(ErrorCode::InvalidConfig, "brightness_range must lie in [0,1)");
}

double poly_learning_rate(const TrainConfig& config, std::int64_t iteration, std::int64_t total) {
  if (total <= 0) return config.lr_start;
  const double progress = std::clamp(double(iteration) / double(total), 0.0, 1.0);
  return config.lr_end + (config.lr_start - config.lr_end) * std::pow(1.0 - progress, config.poly_power);
}

namespace {

nn::Tensor brightened(const nn::Tensor& image, double factor) {
  nn::Tensor out = image.clone();
  for (double& v : out.data()) v = std::clamp(v * factor, 0.0, 1.0);
  return out;
}

}  // namespace

TrainResult train(PlardModel& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& config, const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  const auto& first = train_set.front().image.shape();
  for (const auto& s : train_set)
    if (s.image.shape() != first) throw Error(ErrorCode::ShapeMismatch, "training images differ in size");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> brightness(1.0 - config.brightness_range, 1.0 + config.brightness_range);
  nn::SgdOptimizer optimizer(config.momentum, config.weight_decay);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::int64_t total = static_cast<std::int64_t>(config.epochs) * static_cast<std::int64_t>(order.size());
  std::int64_t iteration = 0;

  TrainResult result;
  model.params().zero_grad();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog entry;
    entry.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const Sample& s = train_set[idx];
      const nn::Tensor image = config.brightness_augment ? brightened(s.image, brightness(rng)) : s.image;
      const auto outputs = model.forward(image, s.lidar);
      nn::Tensor loss = total_loss(outputs, s.target, config.weights, s.mask);
      const double value = loss.item();
      if (!std::isfinite(value))
        throw Error(ErrorCode::Numerical, "non-finite loss at epoch " + std::to_string(epoch));
      loss.backward();
      entry.lr = poly_learning_rate(config, iteration, total);
      optimizer.step(model.params(), entry.lr);
      ++iteration;
      loss_sum += value;
    }
    entry.mean_loss = loss_sum / double(order.size());
    bool improved = val_set.empty();
    if (!val_set.empty()) {
      entry.val_max_f = evaluate_model(model, val_set).overall.max_f;
      improved = result.best_epoch == 0 || entry.val_max_f > result.best_val_max_f;
    }
    if (improved) {
      result.best_epoch = epoch;
      result.best_val_max_f = entry.val_max_f;
      result.best_checkpoint = nn::serialize_checkpoint(model.params());
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.final_checkpoint = nn::serialize_checkpoint(model.params());
  return result;
}

}  // namespace plard
