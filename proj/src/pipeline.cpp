#include "plard/pipeline.hpp"

#include "plard/error.hpp"

namespace plard {

nn::Tensor image_tensor(const Image8& image) {
  if (image.channels != 3) throw Error(ErrorCode::ShapeMismatch, "image tensor needs an RGB image");
  nn::Tensor t({1, 3, image.height, image.width});
  auto d = t.data();
  const std::size_t plane = static_cast<std::size_t>(image.width) * image.height;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c)
        d[c * plane + static_cast<std::size_t>(y) * image.width + x] = image.at(x, y, c) / 255.0;
  return t;
}

nn::Tensor adt_tensor(const AdtImage& adt) {
  nn::Tensor t({1, 1, adt.height, adt.width});
  auto d = t.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = adt.rescaled[i] / 255.0;
  return t;
}

nn::Tensor projection_tensor(const ProjectionImage& proj) {
  return nn::Tensor({1, 3, proj.height, proj.width}, proj.channels);
}

AdtImage scene_adt(const PointCloud& cloud, const CalibrationSet& calib, int width, int height, int window) {
  const auto points = project(cloud, calib, width, height);
  return adt_transform(rasterize_altitude(points, width, height), window);
}

nn::Tensor lidar_tensor(LidarInput input, const PointCloud& cloud, const CalibrationSet& calib, int width,
                        int height) {
  switch (input) {
    case LidarInput::None: return nn::Tensor({1, 1, height, width});
    case LidarInput::Adt: return adt_tensor(scene_adt(cloud, calib, width, height));
    case LidarInput::Projection: {
      const auto points = project(cloud, calib, width, height);
      return projection_tensor(direct_projection(points, cloud, width, height));
    }
  }
  return {};
}

void target_tensors(const RoadMask& gt, nn::Tensor& target, nn::Tensor& mask) {
  target = nn::Tensor({1, 2, gt.height, gt.width});
  mask = nn::Tensor({1, 1, gt.height, gt.width});
  auto t = target.data();
  auto m = mask.data();
  const std::size_t plane = gt.labels.size();
  for (std::size_t i = 0; i < plane; ++i) {
    switch (gt.labels[i]) {
      case Label::Road: t[plane + i] = 1.0; m[i] = 1.0; break;
      case Label::NonRoad: t[i] = 1.0; m[i] = 1.0; break;
      case Label::Ignore: break;
    }
  }
}

Sample make_sample(const SceneBundle& scene, LidarInput input) {
  if (scene.gt.width != scene.image.width || scene.gt.height != scene.image.height)
    throw Error(ErrorCode::ShapeMismatch, "ground truth and image sizes differ");
  Sample s;
  s.image = image_tensor(scene.image);
  s.lidar = lidar_tensor(input, scene.cloud, scene.calib, scene.image.width, scene.image.height);
  target_tensors(scene.gt, s.target, s.mask);
  s.gt = scene.gt;
  s.category = to_string(scene.category);
  return s;
}

std::vector<Sample> make_samples(std::span<const SceneBundle> scenes, LidarInput input) {
  std::vector<Sample> out(scenes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < scenes.size(); ++i) out[i] = make_sample(scenes[i], input);
  return out;
}

ConfidenceMap predict(const PlardModel& model, const Sample& sample) {
  nn::NoGradGuard guard;
  const auto out = model.forward(sample.image, sample.lidar);
  const auto& shape = out.parsing.shape();
  ConfidenceMap map(shape.w, shape.h);
  const auto d = out.parsing.data();
  std::copy(d.begin() + static_cast<std::ptrdiff_t>(shape.plane()), d.begin() + 2 * static_cast<std::ptrdiff_t>(shape.plane()),
            map.values.begin());
  return map;
}

ConfidenceMap predict_quantized(const PlardModel& model, const Sample& sample) {
  return dequantize_confidence(quantize_confidence(predict(model, sample)));
}

EvalReport evaluate_model(const PlardModel& model, std::span<const Sample> samples) {
  std::vector<CategorizedSweep> sweeps(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sweeps[i].category = samples[i].category;
    sweeps[i].sweep.add(predict_quantized(model, samples[i]), samples[i].gt);
  }
  return aggregate(sweeps);
}

}  // namespace plard
