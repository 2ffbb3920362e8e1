#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plard/lidar_io.hpp"

namespace plard {

/// Per-pixel altitude of the nearest projected LiDAR return.
struct AltitudeMap {
  int width = 0;
  int height = 0;
  std::vector<double> altitude;       // meaningful where occupied
  std::vector<std::uint8_t> occupied;  // 0/1

  AltitudeMap() = default;
  AltitudeMap(int w, int h)
      : width(w), height(h), altitude(static_cast<std::size_t>(w) * h, 0.0),
        occupied(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool is_occupied(int x, int y) const { return occupied[index(x, y)] != 0; }
  void set(int x, int y, double z) {
    altitude[index(x, y)] = z;
    occupied[index(x, y)] = 1;
  }
  std::size_t occupied_count() const;
};

/// Altitude-difference image: raw mean absolute altitude gradient per pixel
/// plus its per-image [0,255] rescale.
struct AdtImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> rescaled;
  double max_value = 0.0;

  bool operator==(const AdtImage&) const = default;
};

/// Direct projection baseline: normalized X, Y, Z of the nearest projected
/// point, channel-planar (3 x height x width), zero where unoccupied.
struct ProjectionImage {
  int width = 0;
  int height = 0;
  std::vector<double> channels;

  double at(int c, int x, int y) const {
    return channels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

/// How the normalizer of a pixel's neighbor sum is chosen.
enum class NeighborNorm {
  Occupied,  // number of occupied neighbors in the window
  Fixed,     // window*window - 1, regardless of occupancy
};

inline constexpr int kDefaultAdtWindow = 7;

AltitudeMap rasterize_altitude(std::span<const ProjectedPoint> points, int width, int height);

AdtImage adt_transform(const AltitudeMap& map, int window = kDefaultAdtWindow,
                       NeighborNorm norm = NeighborNorm::Occupied);

ProjectionImage direct_projection(std::span<const ProjectedPoint> points, const PointCloud& cloud, int width,
                                  int height);

/// Single-threaded reference kernels. Same arithmetic, no OpenMP; kept to
/// check the parallel versions and as the benchmark baseline.
namespace serial {
AdtImage adt_transform(const AltitudeMap& map, int window = kDefaultAdtWindow,
                       NeighborNorm norm = NeighborNorm::Occupied);
}

}  // namespace plard
