#include "plard/evalkit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "plard/error.hpp"

namespace plard {

std::size_t RoadMask::count(Label l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

ConfusionSweep::ConfusionSweep(int thresholds) {
  if (thresholds < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 thresholds");
  tp_.assign(static_cast<std::size_t>(thresholds), 0);
  fp_.assign(static_cast<std::size_t>(thresholds), 0);
}

void ConfusionSweep::add(const ConfidenceMap& pred, const RoadMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw Error(ErrorCode::DimensionMismatch, "prediction " + std::to_string(pred.width) + "x" +
                                                  std::to_string(pred.height) + " vs ground truth " +
                                                  std::to_string(gt.width) + "x" + std::to_string(gt.height));
  const int n = thresholds();
  // passed[k]: pixels that clear exactly the k lowest thresholds.
  std::vector<std::int64_t> road_passed(static_cast<std::size_t>(n) + 1, 0);
  std::vector<std::int64_t> non_passed(static_cast<std::size_t>(n) + 1, 0);
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const Label l = gt.labels[i];
    if (l == Label::Ignore) continue;
    const double c = pred.values[i];
    int k = std::clamp(static_cast<int>(std::floor(c * (n - 1))), -1, n - 1);
    while (k + 1 < n && threshold(k + 1) <= c) ++k;
    while (k >= 0 && threshold(k) > c) --k;
    auto& bins = l == Label::Road ? road_passed : non_passed;
    ++bins[static_cast<std::size_t>(k + 1)];
    if (l == Label::Road)
      ++road_;
    else
      ++nonroad_;
  }
  std::int64_t road_above = 0, non_above = 0;
  for (int i = n - 1; i >= 0; --i) {
    road_above += road_passed[static_cast<std::size_t>(i) + 1];
    non_above += non_passed[static_cast<std::size_t>(i) + 1];
    tp_[static_cast<std::size_t>(i)] += road_above;
    fp_[static_cast<std::size_t>(i)] += non_above;
  }
}

void ConfusionSweep::merge(const ConfusionSweep& other) {
  if (other.thresholds() != thresholds())
    throw Error(ErrorCode::DimensionMismatch, "cannot merge sweeps with different threshold counts");
  for (std::size_t i = 0; i < tp_.size(); ++i) {
    tp_[i] += other.tp_[i];
    fp_[i] += other.fp_[i];
  }
  road_ += other.road_;
  nonroad_ += other.nonroad_;
}

MetricTuple ConfusionSweep::metrics() const {
  MetricTuple m;
  const int n = thresholds();
  if (road_ == 0) {
    m.recall_defined = false;
    return m;
  }
  const double positives = double(road_);
  std::vector<double> precision(static_cast<std::size_t>(n)), recall(static_cast<std::size_t>(n));
  int best = 0;
  double best_f = -1.0;
  for (int i = 0; i < n; ++i) {
    const auto tp = double(tp_[static_cast<std::size_t>(i)]);
    const auto predicted = double(tp_[static_cast<std::size_t>(i)] + fp_[static_cast<std::size_t>(i)]);
    const double p = predicted > 0.0 ? tp / predicted : 0.0;
    const double r = tp / positives;
    precision[static_cast<std::size_t>(i)] = p;
    recall[static_cast<std::size_t>(i)] = r;
    const double f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    if (f > best_f) {
      best_f = f;
      best = i;
    }
  }

  double ap = 0.0;
  for (int j = 0; j < kApRecallAnchors; ++j) {
    const double anchor = double(j) / double(kApRecallAnchors - 1);
    double best_p = 0.0;
    for (int i = 0; i < n; ++i)
      if (recall[static_cast<std::size_t>(i)] >= anchor) best_p = std::max(best_p, precision[static_cast<std::size_t>(i)]);
    ap += best_p;
  }

  const auto b = static_cast<std::size_t>(best);
  m.max_f = 100.0 * best_f;
  m.ap = 100.0 * ap / kApRecallAnchors;
  m.pre = 100.0 * precision[b];
  m.rec = 100.0 * recall[b];
  m.fpr = nonroad_ > 0 ? 100.0 * double(fp_[b]) / double(nonroad_) : 0.0;
  m.fnr = 100.0 * double(road_ - tp_[b]) / positives;
  m.threshold_at_maxf = threshold(best);
  return m;
}

EvalReport compute_metrics(const ConfidenceMap& pred, const RoadMask& gt, int thresholds) {
  ConfusionSweep sweep(thresholds);
  sweep.add(pred, gt);
  EvalReport r;
  r.overall = sweep.metrics();
  r.thresholds = thresholds;
  return r;
}

EvalReport aggregate(std::span<const CategorizedSweep> scenes) {
  if (scenes.empty()) throw Error(ErrorCode::EmptyInput, "aggregate needs at least one scene");
  const int n = scenes.front().sweep.thresholds();
  ConfusionSweep overall(n);
  std::map<std::string, ConfusionSweep> per;
  for (const auto& s : scenes) {
    overall.merge(s.sweep);
    per.try_emplace(s.category, n).first->second.merge(s.sweep);
  }
  EvalReport r;
  r.thresholds = n;
  r.overall = overall.metrics();
  for (const auto& [cat, sweep] : per) r.per_category[cat] = sweep.metrics();
  return r;
}

nlohmann::json to_json(const MetricTuple& m) {
  return {{"MaxF", m.max_f}, {"AP", m.ap},   {"PRE", m.pre},
          {"REC", m.rec},    {"FPR", m.fpr}, {"FNR", m.fnr},
          {"threshold_at_maxf", m.threshold_at_maxf}, {"recall_defined", m.recall_defined}};
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["overall"] = to_json(report.overall);
  j["per_category"] = nlohmann::json::object();
  for (const auto& [cat, m] : report.per_category) j["per_category"][cat] = to_json(m);
  j["thresholds"] = report.thresholds;
  j["ap_recall_anchors"] = kApRecallAnchors;
  return j;
}

namespace {

Eigen::Matrix3d grid_to_image(const BevMapping& bev) {
  if (std::abs(bev.image_to_grid.determinant()) < 1e-12)
    throw Error(ErrorCode::SingularHomography, "BEV homography is not invertible");
  return bev.image_to_grid.inverse();
}

template <typename Fn>
void for_each_cell(const BevMapping& bev, const Eigen::Matrix3d& inv, Fn&& fn) {
  for (int gy = 0; gy < bev.grid_height; ++gy)
    for (int gx = 0; gx < bev.grid_width; ++gx) {
      const Eigen::Vector3d src = inv * Eigen::Vector3d(gx, gy, 1.0);
      if (src.z() == 0.0) {
        fn(gx, gy, false, 0.0, 0.0);
        continue;
      }
      fn(gx, gy, true, src.x() / src.z(), src.y() / src.z());
    }
}

}  // namespace

ConfidenceMap to_bev(const ConfidenceMap& map, const BevMapping& bev) {
  const Eigen::Matrix3d inv = grid_to_image(bev);
  ConfidenceMap out(bev.grid_width, bev.grid_height, 0.0);
  for_each_cell(bev, inv, [&](int gx, int gy, bool finite, double sx, double sy) {
    if (!finite || sx < -0.5 || sy < -0.5 || sx >= map.width - 0.5 || sy >= map.height - 0.5) return;
    const double cx = std::clamp(sx, 0.0, double(map.width - 1));
    const double cy = std::clamp(sy, 0.0, double(map.height - 1));
    const int x0 = static_cast<int>(std::floor(cx)), y0 = static_cast<int>(std::floor(cy));
    const int x1 = std::min(x0 + 1, map.width - 1), y1 = std::min(y0 + 1, map.height - 1);
    const double fx = cx - x0, fy = cy - y0;
    out.at(gx, gy) = (1 - fy) * ((1 - fx) * map.at(x0, y0) + fx * map.at(x1, y0)) +
                     fy * ((1 - fx) * map.at(x0, y1) + fx * map.at(x1, y1));
  });
  return out;
}

RoadMask to_bev(const RoadMask& mask, const BevMapping& bev) {
  const Eigen::Matrix3d inv = grid_to_image(bev);
  RoadMask out(bev.grid_width, bev.grid_height, Label::Ignore);
  for_each_cell(bev, inv, [&](int gx, int gy, bool finite, double sx, double sy) {
    if (!finite) return;
    const long x = std::lround(sx), y = std::lround(sy);
    if (x < 0 || y < 0 || x >= mask.width || y >= mask.height) return;
    out.at(gx, gy) = mask.at(static_cast<int>(x), static_cast<int>(y));
  });
  return out;
}

BevMapping bev_from_calibration(const CalibrationSet& calib, double x_near, double x_far, double y_right,
                                double y_left, double resolution) {
  if (!(x_far > x_near) || !(y_left > y_right) || !(resolution > 0.0))
    throw Error(ErrorCode::InvalidConfig, "empty BEV grid");
  Eigen::Matrix4d cam = Eigen::Matrix4d::Identity();
  cam.topRows<3>() = calib.rect * calib.extrinsic;
  const Eigen::Matrix<double, 3, 4> chain = calib.proj * cam;
  Eigen::Matrix3d ground_to_image;
  ground_to_image.col(0) = chain.col(0);
  ground_to_image.col(1) = chain.col(1);
  ground_to_image.col(2) = chain.col(3);
  Eigen::Matrix3d grid_to_ground;
  grid_to_ground << 0.0, -resolution, x_far, -resolution, 0.0, y_left, 0.0, 0.0, 1.0;
  const Eigen::Matrix3d g2i = ground_to_image * grid_to_ground;
  if (std::abs(g2i.determinant()) < 1e-12)
    throw Error(ErrorCode::SingularHomography, "camera sees the ground plane edge-on");
  BevMapping bev;
  bev.image_to_grid = g2i.inverse();
  bev.grid_width = static_cast<int>(std::floor((y_left - y_right) / resolution)) + 1;
  bev.grid_height = static_cast<int>(std::floor((x_far - x_near) / resolution)) + 1;
  return bev;
}

RoadMask decode_road_mask(const Image8& image, const LabelColors& colors) {
  if (image.channels != 3) throw Error(ErrorCode::InvalidConfig, "ground truth PNG must be RGB");
  RoadMask mask(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const std::array<std::uint8_t, 3> c{image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)};
      if (c == colors.road)
        mask.at(x, y) = Label::Road;
      else if (c == colors.nonroad)
        mask.at(x, y) = Label::NonRoad;
      else if (c == colors.ignore)
        mask.at(x, y) = Label::Ignore;
      else
        throw Error(ErrorCode::InvalidConfig, "unmapped ground-truth color at (" + std::to_string(x) + "," +
                                                  std::to_string(y) + ")");
    }
  return mask;
}

Image8 encode_road_mask(const RoadMask& mask, const LabelColors& colors) {
  Image8 img(mask.width, mask.height, 3);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      const Label l = mask.at(x, y);
      const auto& c = l == Label::Road ? colors.road : l == Label::NonRoad ? colors.nonroad : colors.ignore;
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[static_cast<std::size_t>(k)];
    }
  return img;
}

Image8 quantize_confidence(const ConfidenceMap& map) {
  Image8 img(map.width, map.height, 1);
  for (std::size_t i = 0; i < map.values.size(); ++i)
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(map.values[i], 0.0, 1.0)));
  return img;
}

ConfidenceMap dequantize_confidence(const Image8& image) {
  if (image.channels != 1) throw Error(ErrorCode::InvalidConfig, "prediction PNG must be 8-bit gray");
  ConfidenceMap map(image.width, image.height);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) map.values[i] = double(image.pixels[i]) / 255.0;
  return map;
}

}  // namespace plard
