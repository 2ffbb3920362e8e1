#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "plard/image.hpp"
#include "plard/lidar_io.hpp"

namespace plard {

enum class Label : std::uint8_t { NonRoad = 0, Road = 1, Ignore = 2 };

struct RoadMask {
  int width = 0;
  int height = 0;
  std::vector<Label> labels;

  RoadMask() = default;
  RoadMask(int w, int h, Label fill = Label::NonRoad)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}
  Label at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  Label& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count(Label l) const;
  bool operator==(const RoadMask&) const = default;
};

/// Per-pixel road probability in [0,1].
struct ConfidenceMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  ConfidenceMap() = default;
  ConfidenceMap(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Metrics at the MaxF working point, all in percent.
struct MetricTuple {
  double max_f = 0.0;
  double ap = 0.0;
  double pre = 0.0;
  double rec = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
  double threshold_at_maxf = 0.0;
  /// False when the ground truth holds no road pixel: recall and everything
  /// built on it are undefined and reported as 0.
  bool recall_defined = true;
};

inline constexpr int kDefaultThresholds = 256;
inline constexpr int kApRecallAnchors = 41;  // recall 0, 0.025, ..., 1

/// Pixel confusion counts at `thresholds` evenly spaced cut-offs
/// t_i = i / (thresholds - 1); a pixel is predicted road at t_i when its
/// confidence is >= t_i. Ignore pixels are skipped. Accumulators merge by
/// adding counts, so pooling is associative and commutative.
class ConfusionSweep {
 public:
  explicit ConfusionSweep(int thresholds = kDefaultThresholds);

  void add(const ConfidenceMap& pred, const RoadMask& gt);
  void merge(const ConfusionSweep& other);

  int thresholds() const { return static_cast<int>(tp_.size()); }
  double threshold(int i) const { return double(i) / double(thresholds() - 1); }
  std::int64_t true_positives(int i) const { return tp_[static_cast<std::size_t>(i)]; }
  std::int64_t false_positives(int i) const { return fp_[static_cast<std::size_t>(i)]; }
  std::int64_t road_pixels() const { return road_; }
  std::int64_t nonroad_pixels() const { return nonroad_; }

  MetricTuple metrics() const;

 private:
  std::vector<std::int64_t> tp_;
  std::vector<std::int64_t> fp_;
  std::int64_t road_ = 0;
  std::int64_t nonroad_ = 0;
};

struct EvalReport {
  MetricTuple overall;
  std::map<std::string, MetricTuple> per_category;
  int thresholds = kDefaultThresholds;
};

EvalReport compute_metrics(const ConfidenceMap& pred, const RoadMask& gt, int thresholds = kDefaultThresholds);

struct CategorizedSweep {
  std::string category;
  ConfusionSweep sweep;
};

/// Pools confusion counts within each category and overall, then computes
/// metrics from the pooled counts.
EvalReport aggregate(std::span<const CategorizedSweep> scenes);

nlohmann::json to_json(const MetricTuple& m);
nlohmann::json to_json(const EvalReport& report);

/// Homography from perspective pixel coordinates to a ground grid.
struct BevMapping {
  Eigen::Matrix3d image_to_grid = Eigen::Matrix3d::Identity();
  int grid_width = 0;
  int grid_height = 0;
};

/// Inverse warp: bilinear sampling; cells that map outside the image get 0.
ConfidenceMap to_bev(const ConfidenceMap& map, const BevMapping& bev);
/// Inverse warp: nearest sampling; cells outside the image become Ignore.
RoadMask to_bev(const RoadMask& mask, const BevMapping& bev);

/// Ground grid for the z = 0 plane of the LiDAR frame: columns run from
/// y_left to the right, rows from x_far towards the vehicle, one cell per
/// `resolution` meters; cell (i, j) sits at (x_far - j*res, y_left - i*res).
BevMapping bev_from_calibration(const CalibrationSet& calib, double x_near, double x_far, double y_right,
                                double y_left, double resolution);

/// Ground-truth color coding (KITTI uses magenta road, red non-road).
struct LabelColors {
  std::array<std::uint8_t, 3> road{255, 0, 255};
  std::array<std::uint8_t, 3> nonroad{255, 0, 0};
  std::array<std::uint8_t, 3> ignore{0, 0, 0};
};

RoadMask decode_road_mask(const Image8& image, const LabelColors& colors = {});
Image8 encode_road_mask(const RoadMask& mask, const LabelColors& colors = {});

/// 8-bit quantization used for prediction files: round(255 * p).
Image8 quantize_confidence(const ConfidenceMap& map);
ConfidenceMap dequantize_confidence(const Image8& image);

}  // namespace plard
