#include "plard/adt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "plard/error.hpp"

namespace plard {
namespace {

struct Offset {
  int dx;
  int dy;
  double inv_dist;
};

std::vector<Offset> window_offsets(int window) {
  if (window < 3 || window % 2 == 0)
    throw Error(ErrorCode::WindowTooSmall, "window must be odd and >= 3, got " + std::to_string(window));
  const int r = window / 2;
  std::vector<Offset> offs;
  offs.reserve(static_cast<std::size_t>(window) * window - 1);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if (dx != 0 || dy != 0) offs.push_back({dx, dy, 1.0 / std::sqrt(double(dx * dx + dy * dy))});
  return offs;
}

// Neighbors are visited in the fixed order of `offs`, so the sum is the same
// whichever thread evaluates the pixel.
inline double adt_pixel(const AltitudeMap& map, const std::vector<Offset>& offs, int x, int y,
                        NeighborNorm norm) {
  if (!map.is_occupied(x, y)) return 0.0;
  const double z = map.altitude[map.index(x, y)];
  double sum = 0.0;
  int count = 0;
  for (const auto& o : offs) {
    const int nx = x + o.dx;
    const int ny = y + o.dy;
    if (nx < 0 || ny < 0 || nx >= map.width || ny >= map.height) continue;
    const std::size_t ni = map.index(nx, ny);
    if (!map.occupied[ni]) continue;
    sum += std::abs(z - map.altitude[ni]) * o.inv_dist;
    ++count;
  }
  if (count == 0) return 0.0;
  const double m = norm == NeighborNorm::Occupied ? double(count) : double(offs.size());
  return sum / m;
}

void finish_rescale(AdtImage& img) {
  img.max_value = 0.0;
  for (double v : img.values) img.max_value = std::max(img.max_value, v);
  img.rescaled.assign(img.values.size(), 0);
  if (img.max_value <= 0.0) return;
  for (std::size_t i = 0; i < img.values.size(); ++i)
    img.rescaled[i] = static_cast<std::uint8_t>(std::lround(255.0 * img.values[i] / img.max_value));
}

AdtImage make_image(const AltitudeMap& map) {
  AdtImage img;
  img.width = map.width;
  img.height = map.height;
  img.values.assign(static_cast<std::size_t>(map.width) * map.height, 0.0);
  return img;
}

// Index of the nearest-depth point per pixel, -1 where nothing landed.
std::vector<std::ptrdiff_t> nearest_per_pixel(std::span<const ProjectedPoint> points, int width, int height) {
  std::vector<std::ptrdiff_t> winner(static_cast<std::size_t>(width) * height, -1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.u >= 0.0 && p.u < width && p.v >= 0.0 && p.v < height))
      throw Error(ErrorCode::OutOfBounds, "projected point " + std::to_string(i) + " lies outside the image");
    const auto px = static_cast<std::size_t>(std::floor(p.v)) * width + static_cast<std::size_t>(std::floor(p.u));
    auto& w = winner[px];
    if (w < 0 || p.depth < points[static_cast<std::size_t>(w)].depth) w = static_cast<std::ptrdiff_t>(i);
  }
  return winner;
}

}  // namespace

std::size_t AltitudeMap::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

AltitudeMap rasterize_altitude(std::span<const ProjectedPoint> points, int width, int height) {
  const auto winner = nearest_per_pixel(points, width, height);
  AltitudeMap map(width, height);
  for (std::size_t px = 0; px < winner.size(); ++px) {
    if (winner[px] < 0) continue;
    map.altitude[px] = points[static_cast<std::size_t>(winner[px])].altitude;
    map.occupied[px] = 1;
  }
  return map;
}

AdtImage adt_transform(const AltitudeMap& map, int window, NeighborNorm norm) {
  const auto offs = window_offsets(window);
  AdtImage img = make_image(map);
  const int h = map.height;
  const int w = map.width;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.values[map.index(x, y)] = adt_pixel(map, offs, x, y, norm);
  finish_rescale(img);
  return img;
}

namespace serial {
AdtImage adt_transform(const AltitudeMap& map, int window, NeighborNorm norm) {
  const auto offs = window_offsets(window);
  AdtImage img = make_image(map);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) img.values[map.index(x, y)] = adt_pixel(map, offs, x, y, norm);
  finish_rescale(img);
  return img;
}
}  // namespace serial

ProjectionImage direct_projection(std::span<const ProjectedPoint> points, const PointCloud& cloud, int width,
                                  int height) {
  ProjectionImage img;
  img.width = width;
  img.height = height;
  img.channels.assign(3 * static_cast<std::size_t>(width) * height, 0.0);
  if (points.empty()) return img;

  // Normalization range spans every projected point, not only pixel winners.
  double lo[3], hi[3];
  std::fill(lo, lo + 3, std::numeric_limits<double>::infinity());
  std::fill(hi, hi + 3, -std::numeric_limits<double>::infinity());
  auto coords = [&](const ProjectedPoint& p) {
    const auto& src = cloud.points.at(p.source_index);
    return std::array<double, 3>{src.x, src.y, src.z};
  };
  for (const auto& p : points) {
    const auto c = coords(p);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }

  const auto winner = nearest_per_pixel(points, width, height);
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (std::size_t px = 0; px < plane; ++px) {
    if (winner[px] < 0) continue;
    const auto c = coords(points[static_cast<std::size_t>(winner[px])]);
    for (int a = 0; a < 3; ++a) {
      const double span = hi[a] - lo[a];
      img.channels[a * plane + px] = span > 0.0 ? (c[a] - lo[a]) / span : 0.5;
    }
  }
  return img;
}

}  // namespace plard
