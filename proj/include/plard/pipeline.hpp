#pragma once

#include <span>
#include <string>
#include <vector>

#include "plard/adt.hpp"
#include "plard/evalkit.hpp"
#include "plard/plard_net.hpp"
#include "plard/synthscene.hpp"

namespace plard {

/// Network-ready tensors for one scene.
struct Sample {
  nn::Tensor image;   // (1,3,h,w) in [0,1]
  nn::Tensor lidar;   // (1,c,h,w), c per LidarInput; (1,1,h,w) zeros for None
  nn::Tensor target;  // (1,2,h,w) one-hot, channel 1 = road
  nn::Tensor mask;    // (1,1,h,w), 0 on ignore pixels
  RoadMask gt;
  std::string category;
};

nn::Tensor image_tensor(const Image8& image);
/// Rescaled ADT image mapped to [0,1].
nn::Tensor adt_tensor(const AdtImage& adt);
nn::Tensor projection_tensor(const ProjectionImage& proj);
AdtImage scene_adt(const PointCloud& cloud, const CalibrationSet& calib, int width, int height,
                   int window = kDefaultAdtWindow);
nn::Tensor lidar_tensor(LidarInput input, const PointCloud& cloud, const CalibrationSet& calib, int width,
                        int height);
void target_tensors(const RoadMask& gt, nn::Tensor& target, nn::Tensor& mask);

Sample make_sample(const SceneBundle& scene, LidarInput input);
std::vector<Sample> make_samples(std::span<const SceneBundle> scenes, LidarInput input);

/// Road probability map of the parsing head, computed without recording
/// gradients.
ConfidenceMap predict(const PlardModel& model, const Sample& sample);
/// Prediction passed through the 8-bit storage used for prediction PNGs, so
/// in-process metrics match metrics recomputed from disk.
ConfidenceMap predict_quantized(const PlardModel& model, const Sample& sample);

/// Pooled metrics of quantized predictions over a set of samples.
EvalReport evaluate_model(const PlardModel& model, std::span<const Sample> samples);

}  // namespace plard
