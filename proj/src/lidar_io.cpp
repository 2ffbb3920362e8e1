#include "plard/lidar_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <map>
#include <sstream>

#include <Eigen/LU>

#include "plard/error.hpp"
#include "plard/file_io.hpp"

namespace plard {
namespace {

constexpr std::size_t kRecordBytes = 16;

float decode_f32_le(const std::byte* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | std::to_integer<std::uint32_t>(p[i]);
  return std::bit_cast<float>(bits);
}

void encode_f32_le(float value, std::byte* p) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<std::byte>(bits & 0xffu);
    bits >>= 8;
  }
}

template <int R, int C>
Eigen::Matrix<double, R, C> row_major(const std::vector<double>& v) {
  Eigen::Matrix<double, R, C> m;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) m(r, c) = v[static_cast<std::size_t>(r * C + c)];
  return m;
}

template <typename M>
void put_row_major(std::ostringstream& os, const char* key, const M& m) {
  os << key << ':';
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) os << ' ' << m(r, c);
  os << '\n';
}

}  // namespace

void CalibrationSet::validate() const {
  if (std::abs(rect.determinant()) <= 1e-9)
    throw Error(ErrorCode::InvalidConfig, "R0_rect is singular");
  if (proj(0, 0) == 0.0 || proj(1, 1) == 0.0)
    throw Error(ErrorCode::InvalidConfig, "P2 has a zero focal entry");
}

PointCloud read_point_cloud(std::span<const std::byte> bytes) {
  if (bytes.size() % kRecordBytes != 0)
    throw Error(ErrorCode::TruncatedRecord,
                "point cloud blob of " + std::to_string(bytes.size()) + " bytes is not a multiple of 16");
  PointCloud cloud;
  cloud.points.reserve(bytes.size() / kRecordBytes);
  for (std::size_t off = 0; off < bytes.size(); off += kRecordBytes) {
    const std::byte* rec = bytes.data() + off;
    LidarPoint p{decode_f32_le(rec), decode_f32_le(rec + 4), decode_f32_le(rec + 8), decode_f32_le(rec + 12)};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(p.reflectance))
      throw Error(ErrorCode::NonFiniteValue, "record " + std::to_string(off / kRecordBytes) + " is not finite");
    cloud.points.push_back(p);
  }
  return cloud;
}

std::vector<std::byte> write_point_cloud(const PointCloud& cloud) {
  std::vector<std::byte> out(cloud.size() * kRecordBytes);
  std::byte* dst = out.data();
  for (const auto& p : cloud.points) {
    encode_f32_le(p.x, dst);
    encode_f32_le(p.y, dst + 4);
    encode_f32_le(p.z, dst + 8);
    encode_f32_le(p.reflectance, dst + 12);
    dst += kRecordBytes;
  }
  return out;
}

PointCloud load_point_cloud(const std::string& path) { return read_point_cloud(read_file_bytes(path)); }

void save_point_cloud(const PointCloud& cloud, const std::string& path) {
  write_file_bytes(path, write_point_cloud(cloud));
}

CalibrationSet read_calibration(std::string_view text) {
  std::map<std::string, std::vector<double>, std::less<>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    double x = 0.0;
    while (values >> x) v.push_back(x);
    entries[key] = std::move(v);
  }

  auto fetch = [&](std::string_view key, std::size_t arity) -> const std::vector<double>& {
    auto it = entries.find(key);
    if (it == entries.end()) throw Error(ErrorCode::MissingKey, "calibration lacks '" + std::string(key) + "'");
    if (it->second.size() != arity)
      throw Error(ErrorCode::WrongArity, std::string(key) + " expects " + std::to_string(arity) + " values, got " +
                                             std::to_string(it->second.size()));
    return it->second;
  };

  CalibrationSet calib;
  calib.proj = row_major<3, 4>(fetch("P2", 12));
  calib.rect = row_major<3, 3>(fetch("R0_rect", 9));
  calib.extrinsic = row_major<3, 4>(fetch("Tr_velo_to_cam", 12));
  return calib;
}

std::string write_calibration(const CalibrationSet& calib) {
  std::ostringstream os;
  os << std::setprecision(17);
  put_row_major(os, "P2", calib.proj);
  put_row_major(os, "R0_rect", calib.rect);
  put_row_major(os, "Tr_velo_to_cam", calib.extrinsic);
  return os.str();
}

CalibrationSet load_calibration(const std::string& path) { return read_calibration(read_file_text(path)); }

void save_calibration(const CalibrationSet& calib, const std::string& path) {
  write_file_text(path, write_calibration(calib));
}

std::vector<ProjectedPoint> project(const PointCloud& cloud, const CalibrationSet& calib, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidConfig, "image size must be positive");

  // Fold the chain into one 3x4 matrix: proj * [rect * extrinsic; 0 0 0 1].
  Eigen::Matrix4d cam = Eigen::Matrix4d::Identity();
  cam.topRows<3>() = calib.rect * calib.extrinsic;
  const Eigen::Matrix<double, 3, 4> chain = calib.proj * cam;

  std::vector<ProjectedPoint> out;
  out.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const Eigen::Vector4d hp(p.x, p.y, p.z, 1.0);
    const Eigen::Vector3d img = chain * hp;
    const double depth = (cam.topRows<3>() * hp).z();
    const double s = img.z();
    // Front-of-camera is judged on the rectified depth so that rescaling P2 by
    // any nonzero factor (including negative) leaves the result unchanged.
    if (!(depth > 0.0) || s == 0.0) continue;
    const double u = img.x() / s;
    const double v = img.y() / s;
    if (!(u >= 0.0 && u < width && v >= 0.0 && v < height)) continue;
    out.push_back({u, v, depth, static_cast<double>(p.z), i});
  }
  return out;
}

}  // namespace plard
