#include <bit>
#include <cstring>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "plard/lidar_io.hpp"
#include "test_util.hpp"

using namespace plard;

namespace {

std::vector<std::byte> encode(const std::vector<float>& values) {
  std::vector<std::byte> out(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = std::byte((bits >> (8 * b)) & 0xff);
  }
  return out;
}

CalibrationSet pinhole(double f, double cx, double cy) {
  CalibrationSet c;
  c.proj << f, 0, cx, 0, 0, f, cy, 0, 0, 0, 1, 0;
  c.rect.setIdentity();
  c.extrinsic << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0;
  return c;
}

CalibrationSet random_calib(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  CalibrationSet c = pinhole(300.0, 160.0, 50.0);
  c.proj(0, 3) = 12.0;
  c.proj(1, 3) = -3.0;
  c.proj(2, 3) = 0.01;
  c.rect = Eigen::Matrix3d::Identity();
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) c.rect(r, k) += small(rng);
  // LiDAR x forward / y left / z up to camera x right / y down / z forward.
  c.extrinsic << 0, -1, 0, 0.1, 0, 0, -1, -0.05, 1, 0, 0, -0.3;
  return c;
}

PointCloud random_cloud(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<float> fwd(-5.f, 40.f), side(-15.f, 15.f), up(-2.f, 3.f), refl(0.f, 1.f);
  PointCloud c;
  for (int i = 0; i < n; ++i) c.points.push_back({fwd(rng), side(rng), up(rng), refl(rng)});
  return c;
}

}  // namespace

TEST(PointCloudIo, DecodesSingleRecord) {
  const auto cloud = read_point_cloud(encode({1.f, 2.f, 3.f, 0.5f}));
  ASSERT_EQ(cloud.size(), 1u);
  EXPECT_EQ(cloud.points[0], (LidarPoint{1.f, 2.f, 3.f, 0.5f}));
}

TEST(PointCloudIo, EmptyBlobGivesEmptyCloud) { EXPECT_TRUE(read_point_cloud({}).empty()); }

TEST(PointCloudIo, PartialRecordIsTruncated) {
  const std::vector<std::byte> blob(24);
  EXPECT_PLARD_ERROR(read_point_cloud(blob), ErrorCode::TruncatedRecord);
}

TEST(PointCloudIo, RejectsNonFinite) {
  EXPECT_PLARD_ERROR(read_point_cloud(encode({1.f, std::numeric_limits<float>::quiet_NaN(), 0.f, 0.f})),
                     ErrorCode::NonFiniteValue);
  EXPECT_PLARD_ERROR(read_point_cloud(encode({1.f, 0.f, 0.f, std::numeric_limits<float>::infinity()})),
                     ErrorCode::NonFiniteValue);
}

TEST(PointCloudIo, RoundTripIsIdentity) {
  std::mt19937_64 rng(3);
  const auto cloud = random_cloud(rng, 500);
  EXPECT_EQ(read_point_cloud(write_point_cloud(cloud)), cloud);
  TempDir dir("cloud");
  save_point_cloud(cloud, dir / "c.bin");
  EXPECT_EQ(load_point_cloud(dir / "c.bin"), cloud);
}

TEST(PointCloudIo, MissingFileIsIoError) { EXPECT_PLARD_ERROR(load_point_cloud("/nonexistent/c.bin"), ErrorCode::Io); }

TEST(Calibration, ParsesIdentityLayout) {
  const std::string text =
      "P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"
      "P2: 1 0 0 0 0 1 0 0 0 0 1 0\n"
      "R0_rect: 1 0 0 0 1 0 0 0 1\n"
      "Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n";
  const auto c = read_calibration(text);
  Eigen::Matrix<double, 3, 4> id34 = Eigen::Matrix<double, 3, 4>::Zero();
  id34.leftCols<3>().setIdentity();
  EXPECT_EQ(c.proj, id34);
  EXPECT_EQ(c.rect, Eigen::Matrix3d::Identity());
  EXPECT_EQ(c.extrinsic, id34);
}

TEST(Calibration, RowMajorOrder) {
  const auto c = read_calibration(
      "P2: 1 2 3 4 5 6 7 8 9 10 11 12\nR0_rect: 1 0 0 0 1 0 0 0 1\nTr_velo_to_cam: 0 0 0 1 0 0 0 2 0 0 0 3\n");
  EXPECT_EQ(c.proj(0, 1), 2.0);
  EXPECT_EQ(c.proj(1, 0), 5.0);
  EXPECT_EQ(c.proj(2, 3), 12.0);
  EXPECT_EQ(c.extrinsic(1, 3), 2.0);
}

TEST(Calibration, MissingKey) {
  EXPECT_PLARD_ERROR(read_calibration("P2: 1 0 0 0 0 1 0 0 0 0 1 0\nTr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n"),
                     ErrorCode::MissingKey);
}

TEST(Calibration, WrongArity) {
  EXPECT_PLARD_ERROR(read_calibration("P2: 1 0 0 0 0 1 0 0 0 0 1\nR0_rect: 1 0 0 0 1 0 0 0 1\n"
                                      "Tr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n"),
                     ErrorCode::WrongArity);
}

TEST(Calibration, TextRoundTripIsExact) {
  std::mt19937_64 rng(5);
  const auto c = random_calib(rng);
  const auto back = read_calibration(write_calibration(c));
  EXPECT_EQ(back.proj, c.proj);
  EXPECT_EQ(back.rect, c.rect);
  EXPECT_EQ(back.extrinsic, c.extrinsic);
}

TEST(Calibration, ValidateRejectsSingularRect) {
  auto c = pinhole(100, 50, 50);
  c.rect.setZero();
  EXPECT_PLARD_ERROR(c.validate(), ErrorCode::InvalidConfig);
  c = pinhole(0, 50, 50);
  EXPECT_PLARD_ERROR(c.validate(), ErrorCode::InvalidConfig);
}

TEST(Project, OpticalAxisLandsOnPrincipalPoint) {
  const auto calib = pinhole(100.0, 32.0, 24.0);
  PointCloud cloud;
  cloud.points.push_back({0.f, 0.f, 7.f, 0.f});
  const auto p = project(cloud, calib, 64, 48);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_DOUBLE_EQ(p[0].u, 32.0);
  EXPECT_DOUBLE_EQ(p[0].v, 24.0);
  EXPECT_DOUBLE_EQ(p[0].depth, 7.0);
  EXPECT_DOUBLE_EQ(p[0].altitude, 7.0);
}

TEST(Project, DropsPointsBehindCamera) {
  const auto calib = pinhole(100.0, 32.0, 24.0);
  PointCloud cloud;
  cloud.points.push_back({0.f, 0.f, -3.f, 0.f});
  cloud.points.push_back({0.f, 0.f, 0.f, 0.f});
  EXPECT_TRUE(project(cloud, calib, 64, 48).empty());
}

TEST(Project, HalfOpenBounds) {
  const auto calib = pinhole(1.0, 0.0, 0.0);
  PointCloud cloud;
  cloud.points.push_back({0.f, 0.f, 1.f, 0.f});   // (0, 0): kept
  cloud.points.push_back({4.f, 0.f, 1.f, 0.f});   // u = width: dropped
  cloud.points.push_back({0.f, 3.f, 1.f, 0.f});   // v = height: dropped
  cloud.points.push_back({-0.01f, 0.f, 1.f, 0.f});  // u < 0: dropped
  const auto p = project(cloud, calib, 4, 3);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].source_index, 0u);
}

TEST(Project, MatchesScalarOracle) {
  std::mt19937_64 rng(11);
  const auto calib = random_calib(rng);
  const auto cloud = random_cloud(rng, 100);
  const int w = 320, h = 100;
  const auto got = project(cloud, calib, w, h);
  std::size_t k = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& q = cloud.points[i];
    const auto ref = oracle::project_point(calib, q.x, q.y, q.z, w, h);
    if (!ref.kept) continue;
    ASSERT_LT(k, got.size());
    EXPECT_EQ(got[k].source_index, i);
    EXPECT_NEAR(got[k].u, ref.u, 1e-9);
    EXPECT_NEAR(got[k].v, ref.v, 1e-9);
    EXPECT_NEAR(got[k].depth, ref.depth, 1e-9);
    EXPECT_EQ(got[k].altitude, double(q.z));
    ++k;
  }
  EXPECT_EQ(k, got.size());
  EXPECT_GT(k, 10u);
}

TEST(Project, HomogeneousScaleInvariance) {
  std::mt19937_64 rng(12);
  const auto calib = random_calib(rng);
  const auto cloud = random_cloud(rng, 300);
  for (double s : {2.5, -1.0, 1e-3}) {
    auto scaled = calib;
    scaled.proj *= s;
    const auto a = project(cloud, calib, 320, 100);
    const auto b = project(cloud, scaled, 320, 100);
    ASSERT_EQ(a.size(), b.size()) << "scale " << s;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].source_index, b[i].source_index);
      EXPECT_NEAR(a[i].u, b[i].u, 1e-9);
      EXPECT_NEAR(a[i].v, b[i].v, 1e-9);
    }
  }
}

TEST(Project, RetainedPointsSatisfyBounds) {
  std::mt19937_64 rng(13);
  const auto calib = random_calib(rng);
  const auto cloud = random_cloud(rng, 2000);
  const auto p = project(cloud, calib, 160, 48);
  EXPECT_LE(p.size(), cloud.size());
  for (const auto& q : p) {
    EXPECT_GE(q.u, 0.0);
    EXPECT_LT(q.u, 160.0);
    EXPECT_GE(q.v, 0.0);
    EXPECT_LT(q.v, 48.0);
    EXPECT_GT(q.depth, 0.0);
  }
}
