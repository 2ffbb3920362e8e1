#pragma once

#include <cstdint>
#include <optional>

#include "plard/layers.hpp"
#include "plard/tensor.hpp"

namespace plard::nn {

Tensor conv2d(const Tensor& input, const ConvLayer& layer);
Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul_elementwise(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, int begin, int count);
/// 2x2 window, stride 2. Ties route the gradient to the first maximum in
/// row-major window order.
Tensor maxpool2(const Tensor& x);
/// Half-pixel-centred bilinear resize with edge clamping.
Tensor upsample_bilinear(const Tensor& x, int out_h, int out_w);
Tensor softmax_channels(const Tensor& x);
Tensor global_avg_pool(const Tensor& x);
/// (n, c, 1, 1) -> (n, c, h, w) by replication.
Tensor broadcast_spatial(const Tensor& x, int h, int w);

inline constexpr double kLogEpsilon = 1e-12;

/// Mean over unmasked pixels of -sum_c target_c * log10(pred_c + eps).
/// `pred` holds per-pixel class probabilities, `target` is one-hot with the
/// same shape, `mask` (n, 1, h, w) marks counted pixels with nonzero values.
Tensor cross_entropy_log10(const Tensor& pred, const Tensor& target, const std::optional<Tensor>& mask = {});

/// Counts conv2d multiply-accumulates issued on the calling thread during its
/// lifetime (bias additions excluded).
class MacCounter {
 public:
  MacCounter();
  std::int64_t count() const;

 private:
  std::int64_t start_;
};

/// Hashes the branch decisions of piecewise-linear ops (ReLU active set,
/// max-pool winners) issued on the calling thread during its lifetime. Two
/// forward passes with equal signatures share one linear region.
class BranchRecorder {
 public:
  BranchRecorder();
  ~BranchRecorder();
  BranchRecorder(const BranchRecorder&) = delete;
  BranchRecorder& operator=(const BranchRecorder&) = delete;
  std::uint64_t signature() const { return hash_; }

 private:
  friend void record_branch(std::uint64_t value);
  std::uint64_t hash_ = 1469598103934665603ull;
  BranchRecorder* previous_;
};

}  // namespace plard::nn
