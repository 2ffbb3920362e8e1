#include "plard/plard_net.hpp"

#include <algorithm>

#include "plard/error.hpp"

namespace plard {

using nn::ConvLayer;
using nn::Tensor;

std::string to_string(LidarInput input) {
  switch (input) {
    case LidarInput::None: return "none";
    case LidarInput::Adt: return "adt";
    case LidarInput::Projection: return "lproj";
  }
  return "none";
}

LidarInput lidar_input_from_string(const std::string& name) {
  if (name == "none") return LidarInput::None;
  if (name == "adt") return LidarInput::Adt;
  if (name == "lproj") return LidarInput::Projection;
  throw Error(ErrorCode::InvalidConfig, "input_mode must be one of adt, lproj, none; got '" + name + "'");
}

void StreamConfig::validate() const {
  if (lidar_divisor <= 0) throw Error(ErrorCode::InvalidConfig, "lidar_divisor must be positive");
  if (fusion_channels <= 0) throw Error(ErrorCode::InvalidConfig, "fusion_channels must be positive");
  for (int s = 0; s < kStages; ++s) {
    const int c = stage_channels[static_cast<std::size_t>(s)];
    if (c <= 0 || c % lidar_divisor != 0)
      throw Error(ErrorCode::InvalidConfig, "stage " + std::to_string(s + 1) + " width " + std::to_string(c) +
                                                " is not a positive multiple of lidar_divisor");
    if (lidar_dilation[static_cast<std::size_t>(s)] <= 0)
      throw Error(ErrorCode::InvalidConfig, "dilation must be positive");
  }
}

Tensor fsa_forward(const Tensor& f_vis, const Tensor& f_lidar, const FsaModule& module) {
  const auto& sv = f_vis.shape();
  const auto& sl = f_lidar.shape();
  if (sv.n != sl.n || sv.h != sl.h || sv.w != sl.w || sv.c != module.proj.out_channels())
    throw Error(ErrorCode::ShapeMismatch, "fsa_forward: visual " + sv.str() + " vs lidar " + sl.str());
  Tensor projected = nn::conv2d(f_lidar, module.proj);
  if (!module.alpha_head || !module.beta_head) return projected;
  const Tensor joint = nn::concat_channels(f_vis, projected);
  const Tensor alpha = nn::conv2d(joint, *module.alpha_head);
  const Tensor beta = nn::conv2d(joint, *module.beta_head);
  return nn::add(nn::mul_elementwise(alpha, projected), beta);
}

Tensor cascaded_fuse(const Tensor& f_vis, const Tensor& adapted, double lambda) {
  if (!(f_vis.shape() == adapted.shape()))
    throw Error(ErrorCode::ShapeMismatch, "cascaded_fuse: " + f_vis.shape().str() + " vs " + adapted.shape().str());
  return nn::add(f_vis, nn::scale(adapted, lambda));
}

std::int64_t fsa_mac_count(const FsaModule& module, int h, int w) {
  auto macs = [&](const ConvLayer& l) {
    return std::int64_t(l.out_channels()) * l.in_channels() * l.kernel() * l.kernel() * h * w;
  };
  std::int64_t total = macs(module.proj);
  if (module.alpha_head) total += macs(*module.alpha_head);
  if (module.beta_head) total += macs(*module.beta_head);
  return total;
}

namespace {

StageBlock make_stage(nn::ParameterStore& store, const std::string& prefix, int in, int out, bool pool,
                      int dilation) {
  StageBlock b;
  b.conv1 = nn::make_conv(store, prefix + ".conv1", in, out, 3, dilation);
  b.conv2 = nn::make_conv(store, prefix + ".conv2", out, out, 3, dilation);
  b.pool = pool;
  return b;
}

Tensor run_stage(const StageBlock& b, const Tensor& x) {
  Tensor h = b.pool ? nn::maxpool2(x) : x;
  h = nn::relu(nn::conv2d(h, b.conv1));
  return nn::relu(nn::conv2d(h, b.conv2));
}

Tensor classify(const Tensor& logits, int h, int w) {
  return nn::softmax_channels(nn::upsample_bilinear(logits, h, w));
}

}  // namespace

PlardModel::PlardModel(const ModelConfig& config) : config_(config), params_(config.seed) {
  const auto& sc = config_.stream;
  sc.validate();

  // Visual stream and its heads are created first so that, for a given seed,
  // they initialise identically whatever LiDAR configuration follows.
  int in = 3;
  for (int s = 0; s < kStages; ++s) {
    const int out = sc.stage_channels[static_cast<std::size_t>(s)];
    visual_[static_cast<std::size_t>(s)] = make_stage(params_, "vis.s" + std::to_string(s + 1), in, out, s > 0, 1);
    in = out;
  }
  const int c5 = sc.stage_channels[4];
  parsing_hidden_ = nn::make_conv(params_, "head.parsing.hidden", 2 * c5, sc.fusion_channels, 1);
  parsing_classifier_ = nn::make_conv(params_, "head.parsing.cls", sc.fusion_channels, 2, 1);
  aux_classifier_ = nn::make_conv(params_, "head.aux.cls", sc.stage_channels[3], 2, 1);

  if (!has_lidar()) return;
  in = config_.lidar_input_channels();
  for (int s = 0; s < kStages; ++s) {
    const int out = sc.lidar_channels(s);
    lidar_[static_cast<std::size_t>(s)] = make_stage(params_, "lidar.s" + std::to_string(s + 1), in, out, s > 0,
                                                     sc.lidar_dilation[static_cast<std::size_t>(s)]);
    in = out;
  }
  lidar_classifier_ = nn::make_conv(params_, "head.lidar.cls", sc.lidar_channels(4), 2, 1);

  for (int s = 1; s < kStages; ++s) {
    const int c = sc.stage_channels[static_cast<std::size_t>(s)];
    const std::string prefix = "fsa.s" + std::to_string(s + 1);
    FsaModule m;
    m.proj = nn::make_conv(params_, prefix + ".proj", sc.lidar_channels(s), c, 1);
    if (config_.use_fsa) {
      m.alpha_head = nn::make_conv(params_, prefix + ".alpha", 2 * c, c, 1);
      m.beta_head = nn::make_conv(params_, prefix + ".beta", 2 * c, c, 1);
      // Start from the identity transform: alpha = 1, beta = 0.
      for (auto* t : {&m.alpha_head->weight, &m.beta_head->weight, &m.beta_head->bias}) {
        Tensor p = *t;
        std::fill(p.data().begin(), p.data().end(), 0.0);
      }
      std::fill(m.alpha_head->bias.data().begin(), m.alpha_head->bias.data().end(), 1.0);
    }
    fsa_[static_cast<std::size_t>(s)] = std::move(m);
  }
}

PlardOutputs PlardModel::forward(const Tensor& image, const Tensor& lidar, ForwardTrace* trace) const {
  const auto& si = image.shape();
  if (si.c != 3) throw Error(ErrorCode::ShapeMismatch, "image must have 3 channels, got " + si.str());
  if (si.h % 16 != 0 || si.w % 16 != 0)
    throw Error(ErrorCode::ShapeMismatch, "image size must be divisible by 16, got " + si.str());
  if (has_lidar()) {
    const auto& sl = lidar.shape();
    if (sl.n != si.n || sl.h != si.h || sl.w != si.w || sl.c != config_.lidar_input_channels())
      throw Error(ErrorCode::ShapeMismatch, "lidar input " + sl.str() + " does not match image " + si.str());
  }

  Tensor fused = image;
  Tensor lid = lidar;
  Tensor stage4;
  for (int s = 0; s < kStages; ++s) {
    const auto k = static_cast<std::size_t>(s);
    const Tensor vis = run_stage(visual_[k], fused);
    fused = vis;
    if (has_lidar()) {
      lid = run_stage(lidar_[k], lid);
      if (trace) trace->lidar[k] = lid;
      if (s > 0) {
        const Tensor adapted = fsa_forward(vis, lid, *fsa_[k]);
        fused = cascaded_fuse(vis, adapted, config_.lambda);
        if (trace) trace->adapted[k] = adapted;
      }
    }
    if (trace) {
      trace->visual[k] = vis;
      trace->fused[k] = fused;
    }
    if (s == 3) stage4 = fused;
  }

  PlardOutputs out;
  const Tensor context = nn::broadcast_spatial(nn::global_avg_pool(fused), fused.shape().h, fused.shape().w);
  const Tensor hidden = nn::relu(nn::conv2d(nn::concat_channels(fused, context), parsing_hidden_));
  out.parsing = classify(nn::conv2d(hidden, parsing_classifier_), si.h, si.w);
  out.aux = classify(nn::conv2d(stage4, aux_classifier_), si.h, si.w);
  if (has_lidar()) out.lidar = classify(nn::conv2d(lid, *lidar_classifier_), si.h, si.w);
  return out;
}

Tensor total_loss(const PlardOutputs& outputs, const Tensor& target, const LossWeights& weights,
                  const std::optional<Tensor>& mask) {
  Tensor loss = nn::scale(nn::cross_entropy_log10(outputs.parsing, target, mask), weights.parsing);
  if (outputs.lidar.defined())
    loss = nn::add(loss, nn::scale(nn::cross_entropy_log10(outputs.lidar, target, mask), weights.lidar));
  return nn::add(loss, nn::scale(nn::cross_entropy_log10(outputs.aux, target, mask), weights.aux));
}

std::size_t copy_matching_parameters(const nn::ParameterStore& from, nn::ParameterStore& to) {
  std::size_t copied = 0;
  for (const auto& [name, dst] : to.entries()) {
    if (!from.contains(name)) continue;
    const Tensor src = from.get(name);
    if (!(src.shape() == dst.shape()))
      throw Error(ErrorCode::ShapeMismatch, "parameter '" + name + "' differs in shape");
    Tensor d = dst;
    std::copy(src.data().begin(), src.data().end(), d.data().begin());
    ++copied;
  }
  return copied;
}

}  // namespace plard
