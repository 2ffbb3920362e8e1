#include "plard/synthscene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Geometry>

#include "plard/error.hpp"
#include "plard/file_io.hpp"

namespace plard {
namespace {

namespace fs = std::filesystem;

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kSkyDistance = 250.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) { return std::mt19937_64(splitmix64(seed ^ (tag * 0x51ed27u))); }

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

enum class Surface { Sky, Road, Offroad, Curb, Obstacle };

struct Hit {
  Surface surface = Surface::Sky;
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  std::size_t obstacle = 0;
  double level = 0.0;  // plane height of ground hits
};

// Slab test in the prism's local frame; returns entry distance and normal.
std::optional<std::pair<double, Eigen::Vector3d>> intersect(const Prism& p, const Eigen::Vector3d& o,
                                                            const Eigen::Vector3d& d) {
  const double c = std::cos(-p.yaw), s = std::sin(-p.yaw);
  const Eigen::Vector2d rel = o.head<2>() - p.center;
  const Eigen::Vector3d lo(c * rel.x() - s * rel.y(), s * rel.x() + c * rel.y(), o.z());
  const Eigen::Vector3d ld(c * d.x() - s * d.y(), s * d.x() + c * d.y(), d.z());
  const Eigen::Vector3d bmin(-p.length / 2, -p.width / 2, 0.0);
  const Eigen::Vector3d bmax(p.length / 2, p.width / 2, p.height);
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  int axis = -1;
  double sign = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(ld[a]) < 1e-15) {
      if (lo[a] < bmin[a] || lo[a] > bmax[a]) return std::nullopt;
      continue;
    }
    double t0 = (bmin[a] - lo[a]) / ld[a];
    double t1 = (bmax[a] - lo[a]) / ld[a];
    double face = -1.0;
    if (t0 > t1) {
      std::swap(t0, t1);
      face = 1.0;
    }
    if (t0 > t_in) {
      t_in = t0;
      axis = a;
      sign = face;
    }
    t_out = std::min(t_out, t1);
  }
  if (axis < 0 || t_in > t_out || t_in <= 1e-9) return std::nullopt;
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  n[axis] = sign;
  // Back to the world frame.
  const double cw = std::cos(p.yaw), sw = std::sin(p.yaw);
  return std::make_pair(t_in, Eigen::Vector3d(cw * n.x() - sw * n.y(), sw * n.x() + cw * n.y(), n.z()));
}

Hit cast(const SceneSpec& scene, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double max_t) {
  Hit hit;
  const auto& road = scene.road;
  if (d.z() < 0.0) {
    // Off-road ground is a plateau at curb height around the sunken road band.
    const double h = road.curb_height;
    double t = o.z() / -d.z();
    Surface surface = Surface::Road;
    double level = 0.0;
    if (h > 0.0 && o.z() > h) {
      const double t_top = (o.z() - h) / -d.z();
      const Eigen::Vector3d top = o + t_top * d;
      if (!road.contains(top.x(), top.y())) {
        t = t_top;
        surface = Surface::Offroad;
        level = h;
      } else {
        const Eigen::Vector3d floor = o + t * d;
        if (!road.contains(floor.x(), floor.y())) {
          // The ray leaves the band between the two levels: it meets the curb face.
          double lo = t_top, hi = t;
          for (int i = 0; i < 40; ++i) {
            const double mid = 0.5 * (lo + hi);
            const Eigen::Vector3d q = o + mid * d;
            (road.contains(q.x(), q.y()) ? lo : hi) = mid;
          }
          t = hi;
          surface = Surface::Curb;
        }
      }
    } else {
      const Eigen::Vector3d floor = o + t * d;
      if (!road.contains(floor.x(), floor.y())) surface = Surface::Offroad;
    }
    if (t <= max_t) {
      hit.surface = surface;
      hit.t = t;
      hit.level = level;
      hit.normal = surface == Surface::Curb ? Eigen::Vector3d(-d.x(), -d.y(), 0.0).normalized()
                                            : Eigen::Vector3d::UnitZ();
    }
  }
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const auto r = intersect(scene.obstacles[i], o, d);
    if (r && r->first < hit.t && r->first <= max_t) {
      hit.surface = Surface::Obstacle;
      hit.t = r->first;
      hit.normal = r->second;
      hit.obstacle = i;
    }
  }
  if (hit.surface != Surface::Sky) hit.point = o + hit.t * d;
  // Snap flat ground hits onto their plane.
  if (hit.surface == Surface::Road || hit.surface == Surface::Offroad) hit.point.z() = hit.level;
  return hit;
}

bool inside_prism(const Prism& p, const Eigen::Vector3d& q) {
  const double c = std::cos(-p.yaw), s = std::sin(-p.yaw);
  const Eigen::Vector2d rel = q.head<2>() - p.center;
  const double lx = c * rel.x() - s * rel.y();
  const double ly = s * rel.x() + c * rel.y();
  return std::abs(lx) <= p.length / 2 && std::abs(ly) <= p.width / 2 && q.z() >= 0.0 && q.z() <= p.height;
}

bool inside_convex(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& q) {
  if (poly.size() < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d a = poly[i];
    const Eigen::Vector2d b = poly[(i + 1) % poly.size()];
    const double cross = (b.x() - a.x()) * (q.y() - a.y()) - (b.y() - a.y()) * (q.x() - a.x());
    const int s = cross > 0 ? 1 : (cross < 0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

bool on_marking(const SceneSpec& scene, double x, double y) {
  if (scene.category == Category::UU) return false;
  const auto& road = scene.road;
  constexpr double half_line = 0.075;
  const double lateral = y - road.center(x) + road.width / 2;  // 0 at the right edge
  // Solid edge lines.
  if (lateral < 0.25 + half_line && lateral > 0.25 - half_line) return true;
  if (lateral > road.width - 0.25 - half_line && lateral < road.width - 0.25 + half_line) return true;
  // Dashed lane separators: 3 m paint, 6 m gap.
  const bool dash = std::fmod(x + 100.0, 9.0) < 3.0;
  if (!dash) return false;
  const double lane = road.width / road.lanes;
  for (int k = 1; k < road.lanes; ++k)
    if (std::abs(lateral - k * lane) < half_line) return true;
  return false;
}

Eigen::Matrix3d camera_rotation(const SensorSpec& s) {
  const double cp = std::cos(s.camera_pitch), sp = std::sin(s.camera_pitch);
  const Eigen::Vector3d z_axis(cp, 0.0, -sp);
  const Eigen::Vector3d x_axis(0.0, -1.0, 0.0);
  const Eigen::Vector3d y_axis = z_axis.cross(x_axis);
  Eigen::Matrix3d r;
  r.row(0) = x_axis.transpose();
  r.row(1) = y_axis.transpose();
  r.row(2) = z_axis.transpose();
  return r;
}

Eigen::Vector3d camera_center(const SensorSpec& s) { return {s.camera_x, 0.0, s.camera_height}; }

Rgb random_color(std::mt19937_64& rng) { return {uniform(rng, 0.15, 0.85), uniform(rng, 0.15, 0.85), uniform(rng, 0.15, 0.85)}; }

void place_side(SceneSpec& spec, std::mt19937_64& rng, double side) {
  const auto& road = spec.road;
  double x = uniform(rng, 1.0, 6.0);
  while (x < road.x_end + 5.0) {
    if (uniform(rng, 0.0, 1.0) < 0.15) {
      x += uniform(rng, 3.0, 8.0);
      continue;
    }
    Prism p;
    double setback = 0.0;
    const double kind = uniform(rng, 0.0, 1.0);
    if (kind < 0.35) {  // parked car
      p.length = uniform(rng, 3.8, 4.8);
      p.width = uniform(rng, 1.6, 1.9);
      p.height = uniform(rng, 1.4, 1.7);
      setback = uniform(rng, 0.2, 1.0);
    } else if (kind < 0.65) {  // wall or hedge
      p.length = uniform(rng, 4.0, 12.0);
      p.width = uniform(rng, 0.3, 0.8);
      p.height = uniform(rng, 0.6, 1.5);
      setback = uniform(rng, 0.2, 1.0);
    } else {  // building
      p.length = uniform(rng, 8.0, 20.0);
      p.width = uniform(rng, 6.0, 12.0);
      p.height = uniform(rng, 4.0, 12.0);
      setback = uniform(rng, 1.5, 5.0);
    }
    const double xc = x + p.length / 2;
    p.center = {xc, road.center(xc) + side * (road.width / 2 + setback + p.width / 2)};
    p.yaw = std::atan(road.curvature * xc);
    p.color = random_color(rng);
    spec.obstacles.push_back(p);
    x += p.length + uniform(rng, 0.3, 3.0);
  }
}

}  // namespace

std::string to_string(Category c) {
  switch (c) {
    case Category::UM: return "UM";
    case Category::UMM: return "UMM";
    case Category::UU: return "UU";
  }
  return "UM";
}

Category category_from_string(const std::string& s) {
  if (s == "UM") return Category::UM;
  if (s == "UMM") return Category::UMM;
  if (s == "UU") return Category::UU;
  throw Error(ErrorCode::InvalidConfig, "unknown category '" + s + "'");
}

double Terrain::relief(double x, double y) const {
  if (amplitude == 0.0) return 0.0;
  return amplitude * (0.6 * std::sin(frequency[0] * x + phase[0]) * std::sin(frequency[1] * y) +
                      0.4 * std::sin(frequency[2] * x + frequency[3] * y + phase[1]));
}

bool RoadSpec::contains(double x, double y) const {
  return x >= x_start && x <= x_end && std::abs(y - center(x)) <= width / 2;
}

SensorSpec default_sensor(int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidConfig, "sensor image size must be positive");
  SensorSpec s;
  s.width = width;
  s.height = height;
  s.focal = 0.55 * width;
  s.cx = 0.5 * width;
  s.cy = 0.3 * height;
  return s;
}

CalibrationSet rig_calibration(const SensorSpec& sensor) {
  CalibrationSet calib;
  calib.proj << sensor.focal, 0.0, sensor.cx, 0.0, 0.0, sensor.focal, sensor.cy, 0.0, 0.0, 0.0, 1.0, 0.0;
  calib.rect = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d r = camera_rotation(sensor);
  calib.extrinsic.leftCols<3>() = r;
  calib.extrinsic.col(3) = -r * camera_center(sensor);
  return calib;
}

SceneSpec sample_scene_spec(std::uint64_t seed, Category category, double corruption_level,
                            const SensorSpec& sensor) {
  if (corruption_level < 0.0 || corruption_level > 1.0)
    throw Error(ErrorCode::InvalidConfig, "corruption_level must lie in [0,1]");
  SceneSpec spec;
  spec.seed = seed;
  spec.category = category;
  spec.sensor = sensor;
  spec.corruption_level = corruption_level;

  auto geo = stream(seed, 1);
  auto& road = spec.road;
  const double lane_width = uniform(geo, 3.0, 3.6);
  road.lanes = category == Category::UMM ? (uniform(geo, 0.0, 1.0) < 0.5 ? 3 : 4) : 2;
  road.width = road.lanes * lane_width + (category == Category::UU ? uniform(geo, -0.8, 0.4) : 0.5);
  road.curvature = uniform(geo, -0.006, 0.006);
  road.lateral_offset = uniform(geo, -1.5, 1.5);
  road.x_end = uniform(geo, 40.0, 70.0);
  place_side(spec, geo, 1.0);
  place_side(spec, geo, -1.0);
  if (uniform(geo, 0.0, 1.0) < 0.4) {  // vehicle ahead on the road
    Prism car;
    car.length = uniform(geo, 3.8, 4.8);
    car.width = uniform(geo, 1.6, 1.9);
    car.height = uniform(geo, 1.4, 1.7);
    const double xc = uniform(geo, 10.0, 30.0);
    const double lane = uniform(geo, -0.5, 0.5) * (road.width - car.width - 0.6);
    car.center = {xc, road.center(xc) + lane};
    car.yaw = std::atan(road.curvature * xc);
    car.color = random_color(geo);
    spec.obstacles.push_back(car);
  }

  // Raised, uneven verges: the road is the flat and smooth part of the ground.
  road.curb_height = uniform(geo, 0.0, 1.0) < 0.85 ? uniform(geo, 0.10, 0.18) : 0.0;
  auto& terrain = spec.terrain;
  terrain.amplitude = uniform(geo, 0.05, 0.10);
  for (double& f : terrain.frequency) f = uniform(geo, 1.5, 5.0);
  for (double& p : terrain.phase) p = uniform(geo, 0.0, 2.0 * std::numbers::pi);

  auto look = stream(seed, 2);
  auto& app = spec.appearance;
  const double gray = uniform(look, 0.25, 0.42);
  app.road = {gray, gray * uniform(look, 0.97, 1.03), gray * uniform(look, 1.0, 1.08)};
  const double ground_kind = uniform(look, 0.0, 1.0);
  if (ground_kind < 0.4)
    app.offroad = {uniform(look, 0.25, 0.4), uniform(look, 0.4, 0.55), uniform(look, 0.2, 0.3)};  // grass
  else if (ground_kind < 0.75) {
    const double pave = uniform(look, 0.5, 0.62);
    app.offroad = {pave, pave, pave * 0.98};  // pavement
  } else
    app.offroad = {uniform(look, 0.48, 0.58), uniform(look, 0.4, 0.48), uniform(look, 0.28, 0.36)};
  app.sky = {uniform(look, 0.55, 0.75), uniform(look, 0.7, 0.85), uniform(look, 0.85, 1.0)};

  auto noise = stream(seed, 3);
  const double c = corruption_level;
  auto& light = spec.lighting;
  light.brightness = 1.0 + c * uniform(noise, -0.45, 0.3);
  const int shadows = static_cast<int>(std::floor(c * 5.0 + uniform(noise, 0.0, 1.0)));
  for (int i = 0; i < shadows; ++i) {
    const double x0 = uniform(noise, 3.0, 40.0);
    const Eigen::Vector2d centre(x0, road.center(x0) + uniform(noise, -8.0, 8.0));
    const double a = uniform(noise, 0.0, std::numbers::pi);
    const double hl = uniform(noise, 1.0, 5.0), hw = uniform(noise, 0.5, 3.0);
    const Eigen::Vector2d ax(std::cos(a), std::sin(a)), ay(-std::sin(a), std::cos(a));
    ShadowPolygon sh;
    sh.vertices = {centre - hl * ax - hw * ay, centre + hl * ax - hw * ay, centre + hl * ax + hw * ay,
                   centre - hl * ax + hw * ay};
    sh.factor = 1.0 - c * uniform(noise, 0.4, 0.75);
    light.shadows.push_back(std::move(sh));
  }
  const int patches = static_cast<int>(std::floor(c * 4.0 + uniform(noise, 0.0, 1.0)));
  for (int i = 0; i < patches; ++i) {
    ExposurePatch p;
    p.u = uniform(noise, 0.0, 1.0);
    p.v = uniform(noise, 0.3, 1.0);
    p.radius_u = uniform(noise, 0.1, 0.3);
    p.radius_v = uniform(noise, 0.2, 0.45);
    p.gain = 1.0 + c * uniform(noise, 1.5, 4.0);
    light.overexposure.push_back(p);
  }
  // Ambiguous appearance: off-road ground drifts towards the road colour,
  // lane paint and curb stones fade.
  app.offroad = lerp(app.offroad, app.road, std::min(1.0, c * uniform(noise, 0.75, 1.25)));
  app.marking = lerp(app.marking, app.road, c * uniform(noise, 0.3, 1.0));
  app.curb = lerp(app.offroad, Rgb{0.6, 0.6, 0.6}, 0.5 * (1.0 - c));
  return spec;
}

SceneBundle generate(const SceneSpec& spec) {
  const auto& s = spec.sensor;
  const Eigen::Vector3d cam = camera_center(s);
  const Eigen::Vector3d lidar_origin(0.0, 0.0, s.lidar_height);
  for (std::size_t i = 0; i < spec.obstacles.size(); ++i) {
    if (spec.obstacles[i].height <= 0.0) throw Error(ErrorCode::DegenerateGeometry, "obstacle without height");
    if (inside_prism(spec.obstacles[i], cam) || inside_prism(spec.obstacles[i], lidar_origin))
      throw Error(ErrorCode::DegenerateGeometry, "sensor origin lies inside obstacle " + std::to_string(i));
  }

  SceneBundle out;
  out.category = spec.category;
  out.seed = spec.seed;
  out.corruption_level = spec.corruption_level;
  out.calib = rig_calibration(s);

  // LiDAR: ring-major azimuth-elevation fan, first hit, uniform altitude noise.
  auto lidar_noise = stream(spec.seed, 4);
  const int steps = static_cast<int>(std::lround(2.0 * s.azimuth_half_range_deg / s.azimuth_step_deg)) + 1;
  for (int ring = 0; ring < s.rings; ++ring) {
    const double elev = (s.elevation_max_deg -
                         (s.rings > 1 ? ring * (s.elevation_max_deg - s.elevation_min_deg) / (s.rings - 1) : 0.0)) *
                        kDeg;
    for (int a = 0; a < steps; ++a) {
      const double az = (-s.azimuth_half_range_deg + a * s.azimuth_step_deg) * kDeg;
      const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
      const Hit hit = cast(spec, lidar_origin, dir, s.max_range);
      if (hit.surface == Surface::Sky) continue;
      const double dz = uniform(lidar_noise, -s.altitude_noise, s.altitude_noise);
      float reflect = 0.6f;
      double z = hit.point.z();
      if (hit.surface == Surface::Road) reflect = 0.3f;
      if (hit.surface == Surface::Offroad) {
        reflect = 0.5f;
        z += spec.terrain.relief(hit.point.x(), hit.point.y());
      }
      out.cloud.points.push_back({static_cast<float>(hit.point.x()), static_cast<float>(hit.point.y()),
                                  static_cast<float>(z + dz), reflect});
    }
  }

  // Camera image and ground truth from the same geometry.
  const Eigen::Matrix3d rt = camera_rotation(s).transpose();
  const Eigen::Vector3d light_dir = Eigen::Vector3d(0.3, 0.5, 0.8).normalized();
  auto texture = stream(spec.seed, 5);
  std::normal_distribution<double> grain(0.0, spec.appearance.texture_noise);
  out.image = Image8(s.width, s.height, 3);
  out.gt = RoadMask(s.width, s.height, Label::NonRoad);
  const auto& app = spec.appearance;
  const auto& light = spec.lighting;
  for (int y = 0; y < s.height; ++y)
    for (int x = 0; x < s.width; ++x) {
      const Eigen::Vector3d ray_cam((x + 0.5 - s.cx) / s.focal, (y + 0.5 - s.cy) / s.focal, 1.0);
      const Eigen::Vector3d dir = (rt * ray_cam).normalized();
      const Hit hit = cast(spec, cam, dir, kSkyDistance);
      Rgb color;
      switch (hit.surface) {
        case Surface::Sky: {
          const double fade = std::clamp(double(y) / std::max(1.0, s.cy), 0.0, 1.0);
          color = lerp(app.sky, Rgb{0.9, 0.9, 0.92}, 0.5 * fade);
          break;
        }
        case Surface::Road:
        case Surface::Offroad:
        case Surface::Curb: {
          const double gx = hit.point.x(), gy = hit.point.y();
          if (hit.surface == Surface::Road) {
            out.gt.at(x, y) = Label::Road;
            color = on_marking(spec, gx, gy) ? app.marking : app.road;
          } else {
            color = hit.surface == Surface::Curb ? app.curb : app.offroad;
          }
          for (const auto& sh : light.shadows)
            if (inside_convex(sh.vertices, {gx, gy}))
              for (double& ch : color) ch *= sh.factor;
          break;
        }
        case Surface::Obstacle: {
          const double shade = 0.55 + 0.45 * std::max(0.0, hit.normal.dot(light_dir));
          color = spec.obstacles[hit.obstacle].color;
          for (double& ch : color) ch *= shade;
          break;
        }
      }
      const double g = 1.0 + grain(texture);
      double exposure = light.brightness;
      for (const auto& p : light.overexposure) {
        const double du = (double(x) / s.width - p.u) / p.radius_u;
        const double dv = (double(y) / s.height - p.v) / p.radius_v;
        const double r2 = du * du + dv * dv;
        if (r2 < 1.0) exposure *= 1.0 + (p.gain - 1.0) * (1.0 - r2);
      }
      for (int k = 0; k < 3; ++k) {
        const double v = std::clamp(color[static_cast<std::size_t>(k)] * g * exposure, 0.0, 1.0);
        out.image.at(x, y, k) = static_cast<std::uint8_t>(std::lround(255.0 * v));
      }
    }
  return out;
}

std::uint64_t scene_seed(std::uint64_t seed, int index) {
  return splitmix64(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(index) + 1);
}

Category scene_category(std::uint64_t seed, int index) {
  static constexpr Category order[3] = {Category::UM, Category::UMM, Category::UU};
  return order[(static_cast<std::uint64_t>(index) + seed % 3) % 3];
}

std::vector<SceneBundle> generate_dataset(int count, std::uint64_t seed, double corruption_level,
                                          const SensorSpec& sensor) {
  if (count < 1) throw Error(ErrorCode::InvalidConfig, "dataset needs at least one scene");
  std::vector<SceneBundle> scenes(static_cast<std::size_t>(count));
  std::vector<std::string> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      scenes[static_cast<std::size_t>(i)] =
          generate(sample_scene_spec(scene_seed(seed, i), scene_category(seed, i), corruption_level, sensor));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorCode::DegenerateGeometry, e);
  return scenes;
}

std::string scene_dir_name(int index) {
  std::ostringstream os;
  os << std::setw(4) << std::setfill('0') << index;
  return os.str();
}

nlohmann::json dataset_manifest(const std::vector<SceneBundle>& scenes, std::uint64_t seed,
                                double corruption_level) {
  nlohmann::json m;
  m["count"] = scenes.size();
  m["seed"] = seed;
  m["corruption_level"] = corruption_level;
  m["width"] = scenes.empty() ? 0 : scenes.front().image.width;
  m["height"] = scenes.empty() ? 0 : scenes.front().image.height;
  m["scenes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < scenes.size(); ++i)
    m["scenes"].push_back({{"id", scene_dir_name(static_cast<int>(i))},
                           {"category", to_string(scenes[i].category)},
                           {"seed", scenes[i].seed}});
  return m;
}

void write_scene(const std::string& scene_dir, const SceneBundle& scene) {
  fs::create_directories(scene_dir);
  const fs::path d(scene_dir);
  save_png(scene.image, (d / "image.png").string());
  save_point_cloud(scene.cloud, (d / "cloud.bin").string());
  save_calibration(scene.calib, (d / "calib.txt").string());
  save_png(encode_road_mask(scene.gt), (d / "gt.png").string());
  const nlohmann::json meta{{"category", to_string(scene.category)},
                            {"seed", scene.seed},
                            {"corruption_level", scene.corruption_level}};
  write_file_text((d / "meta.json").string(), meta.dump(2) + "\n");
}

void write_dataset(const std::string& dir, const std::vector<SceneBundle>& scenes, std::uint64_t seed,
                   double corruption_level) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < scenes.size(); ++i)
    write_scene((fs::path(dir) / scene_dir_name(static_cast<int>(i))).string(), scenes[i]);
  write_file_text((fs::path(dir) / "manifest.json").string(),
                  dataset_manifest(scenes, seed, corruption_level).dump(2) + "\n");
}

SceneBundle load_scene(const std::string& scene_dir) {
  const fs::path d(scene_dir);
  SceneBundle scene;
  scene.image = load_png((d / "image.png").string());
  if (scene.image.channels != 3) throw Error(ErrorCode::InvalidConfig, "scene image must be RGB");
  scene.cloud = load_point_cloud((d / "cloud.bin").string());
  scene.calib = load_calibration((d / "calib.txt").string());
  scene.gt = decode_road_mask(load_png((d / "gt.png").string()));
  if (fs::exists(d / "meta.json")) {
    try {
      const auto meta = nlohmann::json::parse(read_file_text((d / "meta.json").string()));
      scene.category = category_from_string(meta.at("category").get<std::string>());
      scene.seed = meta.value("seed", std::uint64_t{0});
      scene.corruption_level = meta.value("corruption_level", 0.0);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "bad meta.json in '" + scene_dir + "': " + e.what());
    }
  }
  return scene;
}

std::vector<std::string> list_scenes(const std::string& dataset_dir) {
  const fs::path manifest = fs::path(dataset_dir) / "manifest.json";
  std::vector<std::string> ids;
  if (fs::exists(manifest)) {
    try {
      const auto m = nlohmann::json::parse(read_file_text(manifest.string()));
      for (const auto& s : m.at("scenes")) ids.push_back(s.at("id").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "bad manifest '" + manifest.string() + "': " + e.what());
    }
    return ids;
  }
  if (!fs::is_directory(dataset_dir)) throw Error(ErrorCode::Io, "'" + dataset_dir + "' is not a directory");
  for (const auto& entry : fs::directory_iterator(dataset_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "gt.png")) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace plard
