#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "plard/evalkit.hpp"
#include "plard/image.hpp"
#include "plard/lidar_io.hpp"

namespace plard {

enum class Category { UM, UMM, UU };

std::string to_string(Category c);
Category category_from_string(const std::string& s);

using Rgb = std::array<double, 3>;

/// Upright box standing on the ground (z from 0 to height).
struct Prism {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double length = 1.0;  // along the local x axis
  double width = 1.0;
  double height = 1.0;
  Rgb color{0.5, 0.5, 0.5};
};

/// Road band around the centre line y = lateral_offset + curvature * x^2 / 2
/// for x in [x_start, x_end].
struct RoadSpec {
  double width = 7.0;
  double curvature = 0.0;
  double lateral_offset = 0.0;
  double x_start = -5.0;
  double x_end = 60.0;
  int lanes = 2;
  /// Height of the off-road ground above the road surface (0: flush).
  double curb_height = 0.0;

  double center(double x) const { return lateral_offset + 0.5 * curvature * x * x; }
  bool contains(double x, double y) const;
};

/// Relief of the off-road ground: a sum of two sinusoidal bumps with the
/// given amplitude (meters), added to LiDAR returns on that ground.
struct Terrain {
  double amplitude = 0.0;
  std::array<double, 4> frequency{1.0, 1.0, 1.0, 1.0};  // rad/m
  std::array<double, 2> phase{0.0, 0.0};

  double relief(double x, double y) const;
};

/// Multiplicative darkening of ground seen inside a convex ground polygon.
struct ShadowPolygon {
  std::vector<Eigen::Vector2d> vertices;
  double factor = 0.5;
};

/// Elliptic image-space patch (centre and radii as fractions of the image
/// size) whose gain saturates pixels towards white.
struct ExposurePatch {
  double u = 0.5, v = 0.5;
  double radius_u = 0.1, radius_v = 0.1;
  double gain = 3.0;
};

struct LightingSpec {
  double brightness = 1.0;
  std::vector<ShadowPolygon> shadows;
  std::vector<ExposurePatch> overexposure;
};

struct Appearance {
  Rgb road{0.32, 0.32, 0.34};
  Rgb offroad{0.45, 0.55, 0.35};
  Rgb sky{0.65, 0.78, 0.95};
  Rgb marking{0.92, 0.92, 0.92};
  Rgb curb{0.6, 0.6, 0.6};
  double texture_noise = 0.04;
};

struct SensorSpec {
  int width = 320;
  int height = 96;
  double focal = 176.0;
  double cx = 160.0;
  double cy = 28.8;
  double camera_x = 0.27;
  double camera_height = 1.65;
  double camera_pitch = 0.0;  // radians, positive looks down
  double lidar_height = 1.73;
  int rings = 64;
  double elevation_max_deg = 2.0;
  double elevation_min_deg = -24.8;
  double azimuth_step_deg = 0.2;
  double azimuth_half_range_deg = 50.0;
  double max_range = 80.0;
  double altitude_noise = 0.01;
};

/// Camera/LiDAR rig scaled to an image size: focal 0.55*width, principal
/// point at (width/2, 0.3*height).
SensorSpec default_sensor(int width, int height);

struct SceneSpec {
  std::uint64_t seed = 0;
  Category category = Category::UM;
  RoadSpec road;
  Terrain terrain;
  std::vector<Prism> obstacles;
  LightingSpec lighting;
  Appearance appearance;
  SensorSpec sensor;
  double corruption_level = 0.0;
};

struct SceneBundle {
  Image8 image;
  PointCloud cloud;
  CalibrationSet calib;
  RoadMask gt;
  Category category = Category::UM;
  std::uint64_t seed = 0;
  double corruption_level = 0.0;
};

/// Calibration of the rig. The LiDAR frame is ground-referenced: x forward,
/// y left, z up with z = 0 on the ground.
CalibrationSet rig_calibration(const SensorSpec& sensor);

/// Random scene. Geometry depends only on (seed, category, sensor); the
/// corruption level changes lighting and appearance only.
SceneSpec sample_scene_spec(std::uint64_t seed, Category category, double corruption_level,
                            const SensorSpec& sensor);

/// Ray-casts the LiDAR fan and the camera against the same geometry.
SceneBundle generate(const SceneSpec& spec);

/// Seed of scene `index` within a dataset seeded by `seed`.
std::uint64_t scene_seed(std::uint64_t seed, int index);
Category scene_category(std::uint64_t seed, int index);

std::vector<SceneBundle> generate_dataset(int count, std::uint64_t seed, double corruption_level,
                                          const SensorSpec& sensor);

nlohmann::json dataset_manifest(const std::vector<SceneBundle>& scenes, std::uint64_t seed,
                                double corruption_level);

std::string scene_dir_name(int index);
/// Writes numbered scene directories plus manifest.json under `dir`.
void write_dataset(const std::string& dir, const std::vector<SceneBundle>& scenes, std::uint64_t seed,
                   double corruption_level);
void write_scene(const std::string& scene_dir, const SceneBundle& scene);
SceneBundle load_scene(const std::string& scene_dir);
/// Scene directory names listed in a dataset manifest, in order.
std::vector<std::string> list_scenes(const std::string& dataset_dir);

}  // namespace plard
