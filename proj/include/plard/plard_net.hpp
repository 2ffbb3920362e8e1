#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plard/layers.hpp"
#include "plard/ops.hpp"
#include "plard/tensor.hpp"

namespace plard {

inline constexpr int kStages = 5;

/// Which LiDAR representation feeds the LiDAR stream.
enum class LidarInput {
  None,        // image-only model
  Adt,         // 1-channel altitude-difference image
  Projection,  // 3-channel normalized XYZ projection
};

std::string to_string(LidarInput input);
LidarInput lidar_input_from_string(const std::string& name);

struct StreamConfig {
  std::array<int, kStages> stage_channels{16, 32, 64, 128, 128};
  int lidar_divisor = 8;
  int fusion_channels = 32;  // width of the parsing head's hidden layer
  std::array<int, kStages> lidar_dilation{1, 1, 2, 2, 2};

  int lidar_channels(int stage) const { return stage_channels[static_cast<std::size_t>(stage)] / lidar_divisor; }
  void validate() const;
};

struct ModelConfig {
  StreamConfig stream;
  LidarInput input = LidarInput::Adt;
  bool use_fsa = true;
  double lambda = 0.1;
  std::uint64_t seed = 0;

  int lidar_input_channels() const { return input == LidarInput::Projection ? 3 : 1; }
};

struct LossWeights {
  double parsing = 1.0;
  double lidar = 0.4;
  double aux = 0.16;
};

struct StageBlock {
  nn::ConvLayer conv1;
  nn::ConvLayer conv2;
  bool pool = false;
};

/// LiDAR feature adaptation: a 1x1 projection lifts LiDAR features to the
/// visual width, two 1x1 heads over [visual, projected] emit the per-element
/// scale and offset. Without heads the module is a plain projection.
struct FsaModule {
  nn::ConvLayer proj;
  std::optional<nn::ConvLayer> alpha_head;
  std::optional<nn::ConvLayer> beta_head;
};

/// alpha * proj(f_lidar) + beta, alpha/beta = heads(concat(f_vis, proj(f_lidar))).
nn::Tensor fsa_forward(const nn::Tensor& f_vis, const nn::Tensor& f_lidar, const FsaModule& module);

/// Residual injection f_vis + lambda * adapted.
nn::Tensor cascaded_fuse(const nn::Tensor& f_vis, const nn::Tensor& adapted, double lambda);

/// Multiply-accumulates of one adaptation module on an h x w feature map.
std::int64_t fsa_mac_count(const FsaModule& module, int h, int w);

struct PlardOutputs {
  nn::Tensor parsing;
  nn::Tensor aux;
  nn::Tensor lidar;  // undefined for the image-only model
};

/// Intermediate features recorded by forward() on request.
struct ForwardTrace {
  std::array<nn::Tensor, kStages> visual;   // visual stage outputs before fusion
  std::array<nn::Tensor, kStages> fused;    // stage outputs fed onward
  std::array<nn::Tensor, kStages> lidar;    // LiDAR stage outputs
  std::array<nn::Tensor, kStages> adapted;  // adapted LiDAR features (stages 2..5)
};

class PlardModel {
 public:
  explicit PlardModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  /// image: (n,3,h,w) in [0,1]; lidar: (n,c,h,w) with c per config (ignored
  /// for the image-only model); h, w divisible by 16.
  PlardOutputs forward(const nn::Tensor& image, const nn::Tensor& lidar, ForwardTrace* trace = nullptr) const;

  bool has_lidar() const { return config_.input != LidarInput::None; }
  /// Stage indices 1..4 (stages 2..5) carry an adaptation module.
  const std::optional<FsaModule>& fsa(int stage) const { return fsa_[static_cast<std::size_t>(stage)]; }
  FsaModule& mutable_fsa(int stage) { return *fsa_[static_cast<std::size_t>(stage)]; }

  void set_lambda(double lambda) { config_.lambda = lambda; }

 private:
  ModelConfig config_;
  nn::ParameterStore params_;
  std::array<StageBlock, kStages> visual_;
  std::array<StageBlock, kStages> lidar_;
  std::array<std::optional<FsaModule>, kStages> fsa_;
  nn::ConvLayer parsing_hidden_;
  nn::ConvLayer parsing_classifier_;
  nn::ConvLayer aux_classifier_;
  std::optional<nn::ConvLayer> lidar_classifier_;
};

/// w_parsing * L_parsing + w_lidar * L_lidar + w_aux * L_aux with log10
/// cross-entropy terms; the LiDAR term is skipped when the model has none.
nn::Tensor total_loss(const PlardOutputs& outputs, const nn::Tensor& target, const LossWeights& weights,
                      const std::optional<nn::Tensor>& mask = {});

/// Copies values for every parameter name present in both stores.
std::size_t copy_matching_parameters(const nn::ParameterStore& from, nn::ParameterStore& to);

}  // namespace plard
