#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace plard {

struct LidarPoint {
  float x = 0.f;
  float y = 0.f;
  float z = 0.f;  // altitude, up-positive
  float reflectance = 0.f;

  bool operator==(const LidarPoint&) const = default;
};

struct PointCloud {
  std::vector<LidarPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool operator==(const PointCloud&) const = default;
};

/// Calibration chain from the LiDAR frame to image pixels, in the layout of
/// KITTI's calib files (P2, R0_rect, Tr_velo_to_cam).
struct CalibrationSet {
  Eigen::Matrix<double, 3, 4> proj = Eigen::Matrix<double, 3, 4>::Zero();
  Eigen::Matrix3d rect = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> extrinsic = Eigen::Matrix<double, 3, 4>::Zero();

  /// Throws InvalidConfig when rect is singular or the focal entries vanish.
  void validate() const;
};

struct ProjectedPoint {
  double u = 0.0;  // column
  double v = 0.0;  // row
  double depth = 0.0;
  double altitude = 0.0;
  std::size_t source_index = 0;
};

/// Decodes consecutive little-endian float32 (x, y, z, reflectance) records.
PointCloud read_point_cloud(std::span<const std::byte> bytes);
std::vector<std::byte> write_point_cloud(const PointCloud& cloud);

PointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const PointCloud& cloud, const std::string& path);

/// Parses "KEY: v1 v2 ..." lines; needs P2 (12 values), R0_rect (9) and
/// Tr_velo_to_cam (12). Other keys are ignored.
CalibrationSet read_calibration(std::string_view text);
std::string write_calibration(const CalibrationSet& calib);

CalibrationSet load_calibration(const std::string& path);
void save_calibration(const CalibrationSet& calib, const std::string& path);

/// Projects every point through extrinsic -> rect -> proj and keeps the ones
/// in front of the camera that land in [0, width) x [0, height). Output is in
/// input order.
std::vector<ProjectedPoint> project(const PointCloud& cloud, const CalibrationSet& calib,
                                   int width, int height);

}  // namespace plard
