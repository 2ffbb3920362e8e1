#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "plard/adt.hpp"
#include "test_util.hpp"

using namespace plard;

namespace {

ProjectedPoint pt(double u, double v, double depth, double alt, std::size_t idx = 0) {
  return {u, v, depth, alt, idx};
}

AltitudeMap constant_map(int w, int h, double z) {
  AltitudeMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, z);
  return m;
}

}  // namespace

TEST(Rasterize, SinglePointUsesFloor) {
  const std::vector<ProjectedPoint> pts{pt(3.4, 2.7, 10.0, 1.5)};
  const auto m = rasterize_altitude(pts, 8, 5);
  EXPECT_TRUE(m.is_occupied(3, 2));
  EXPECT_EQ(m.altitude[m.index(3, 2)], 1.5);
  EXPECT_EQ(m.occupied_count(), 1u);
}

TEST(Rasterize, NearestDepthWins) {
  const std::vector<ProjectedPoint> pts{pt(1.2, 1.1, 5.0, 0.0), pt(1.9, 1.8, 3.0, 2.0)};
  const auto m = rasterize_altitude(pts, 4, 4);
  EXPECT_EQ(m.altitude[m.index(1, 1)], 2.0);
}

TEST(Rasterize, OutOfBoundsRejected) {
  const std::vector<ProjectedPoint> pts{pt(4.0, 0.0, 1.0, 0.0)};
  EXPECT_PLARD_ERROR(rasterize_altitude(pts, 4, 4), ErrorCode::OutOfBounds);
}

TEST(Rasterize, MatchesMinDepthScan) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 6.0), v(0.0, 5.0), d(1.0, 30.0), a(-1.0, 2.0);
  std::vector<ProjectedPoint> pts;
  for (std::size_t i = 0; i < 50; ++i) pts.push_back(pt(u(rng), v(rng), d(rng), a(rng), i));
  const auto m = rasterize_altitude(pts, 6, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      double best = std::numeric_limits<double>::infinity(), alt = 0.0;
      for (const auto& p : pts)
        if (int(std::floor(p.u)) == x && int(std::floor(p.v)) == y && p.depth < best) {
          best = p.depth;
          alt = p.altitude;
        }
      EXPECT_EQ(m.is_occupied(x, y), std::isfinite(best));
      if (std::isfinite(best)) EXPECT_EQ(m.altitude[m.index(x, y)], alt);
    }
}

TEST(Adt, FlatMapIsZero) {
  const auto adt = adt_transform(constant_map(20, 10, 1.7));
  for (double v : adt.values) EXPECT_EQ(v, 0.0);
  for (auto r : adt.rescaled) EXPECT_EQ(r, 0);
  EXPECT_EQ(adt.max_value, 0.0);
}

TEST(Adt, CenterSpike) {
  auto m = constant_map(3, 3, 0.0);
  m.set(1, 1, 1.0);
  const auto adt = adt_transform(m, 3);
  EXPECT_NEAR(adt.values[m.index(1, 1)], (4.0 + 2.0 * std::sqrt(2.0)) / 8.0, 1e-12);
}

TEST(Adt, IsolatedPixelIsZero) {
  AltitudeMap m(9, 9);
  m.set(4, 4, 5.0);
  m.set(0, 0, -5.0);  // outside the 7x7 window of (4,4)
  const auto adt = adt_transform(m);
  EXPECT_EQ(adt.values[m.index(4, 4)], 0.0);
}

TEST(Adt, WindowValidation) {
  const auto m = constant_map(5, 5, 0.0);
  EXPECT_PLARD_ERROR(adt_transform(m, 1), ErrorCode::WindowTooSmall);
  EXPECT_PLARD_ERROR(adt_transform(m, 4), ErrorCode::WindowTooSmall);
}

TEST(Adt, MatchesOracleOnRandomSparseMaps) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> occ(0.3, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = oracle::random_altitude_map(rng, 32, 32, occ(rng));
    for (int window : {3, 7}) {
      const auto ref = oracle::adt(m, window);
      const auto got = adt_transform(m, window);
      for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(got.values[i], ref[i], 1e-12);
    }
  }
}

TEST(Adt, RescaleInvariant) {
  std::mt19937_64 rng(23);
  const auto m = oracle::random_altitude_map(rng, 24, 16, 0.6);
  const auto adt = adt_transform(m);
  ASSERT_GT(adt.max_value, 0.0);
  double mx = 0.0;
  for (double v : adt.values) mx = std::max(mx, v);
  EXPECT_EQ(adt.max_value, mx);
  for (std::size_t i = 0; i < adt.values.size(); ++i)
    EXPECT_EQ(adt.rescaled[i], std::lround(255.0 * adt.values[i] / mx));
}

TEST(Adt, AltitudeTranslationInvariance) {
  std::mt19937_64 rng(24);
  auto m = oracle::random_altitude_map(rng, 32, 32, 0.7);
  const auto a = adt_transform(m);
  for (std::size_t i = 0; i < m.altitude.size(); ++i) m.altitude[i] += 3.25;
  const auto b = adt_transform(m);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-12);
}

TEST(Adt, ScaleEquivariance) {
  std::mt19937_64 rng(25);
  auto m = oracle::random_altitude_map(rng, 32, 24, 0.8);
  const auto a = adt_transform(m);
  // A power of two keeps every product exact.
  for (double& z : m.altitude) z *= 4.0;
  const auto b = adt_transform(m);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_EQ(b.values[i], 4.0 * a.values[i]);
  EXPECT_EQ(a.rescaled, b.rescaled);
}

TEST(Adt, MirrorSymmetry) {
  std::mt19937_64 rng(26);
  const auto m = oracle::random_altitude_map(rng, 31, 17, 0.5);
  AltitudeMap mirrored(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.is_occupied(x, y)) mirrored.set(m.width - 1 - x, y, m.altitude[m.index(x, y)]);
  const auto a = adt_transform(m);
  const auto b = adt_transform(mirrored);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      EXPECT_NEAR(a.values[m.index(x, y)], b.values[m.index(m.width - 1 - x, y)], 1e-12);
}

TEST(Adt, FixedNormalizerUsesFullWindow) {
  AltitudeMap sparse(7, 7);
  sparse.set(3, 3, 1.0);
  sparse.set(4, 3, 0.0);
  const auto occupied = adt_transform(sparse, 7, NeighborNorm::Occupied);
  const auto fixed = adt_transform(sparse, 7, NeighborNorm::Fixed);
  EXPECT_DOUBLE_EQ(occupied.values[sparse.index(3, 3)], 1.0);
  EXPECT_DOUBLE_EQ(fixed.values[sparse.index(3, 3)], 1.0 / 48.0);
}

TEST(Adt, ParallelMatchesSerialBitwise) {
  std::mt19937_64 rng(27);
  const auto m = oracle::random_altitude_map(rng, 96, 64, 0.4);
  EXPECT_EQ(adt_transform(m), serial::adt_transform(m));
}

TEST(DirectProjection, SinglePointIsHalf) {
  PointCloud cloud;
  cloud.points.push_back({3.f, 4.f, 5.f, 0.f});
  const std::vector<ProjectedPoint> pts{pt(1.5, 1.5, 3.0, 5.0, 0)};
  const auto img = direct_projection(pts, cloud, 4, 4);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(img.at(c, 1, 1), 0.5);
  EXPECT_EQ(img.at(0, 0, 0), 0.0);
}

TEST(DirectProjection, MinMaxEndpoints) {
  PointCloud cloud;
  cloud.points.push_back({0.f, 1.f, 0.f, 0.f});
  cloud.points.push_back({10.f, 1.f, 2.f, 0.f});
  const std::vector<ProjectedPoint> pts{pt(0.5, 0.5, 1.0, 0.0, 0), pt(2.5, 0.5, 1.0, 2.0, 1)};
  const auto img = direct_projection(pts, cloud, 4, 2);
  EXPECT_EQ(img.at(0, 0, 0), 0.0);
  EXPECT_EQ(img.at(0, 2, 0), 1.0);
  EXPECT_EQ(img.at(1, 0, 0), 0.5);
  EXPECT_EQ(img.at(2, 2, 0), 1.0);
}

TEST(DirectProjection, MatchesMinMaxOracle) {
  std::mt19937_64 rng(28);
  std::uniform_real_distribution<float> c(-10.f, 10.f);
  std::uniform_real_distribution<double> u(0.0, 12.0), d(1.0, 50.0);
  PointCloud cloud;
  std::vector<ProjectedPoint> pts;
  for (std::size_t i = 0; i < 60; ++i) {
    cloud.points.push_back({c(rng), c(rng), c(rng), 0.f});
    pts.push_back(pt(u(rng), u(rng), d(rng), cloud.points[i].z, i));
  }
  double lo[3] = {1e9, 1e9, 1e9}, hi[3] = {-1e9, -1e9, -1e9};
  for (const auto& p : pts) {
    const auto& q = cloud.points[p.source_index];
    const double v[3] = {q.x, q.y, q.z};
    for (int k = 0; k < 3; ++k) lo[k] = std::min(lo[k], v[k]), hi[k] = std::max(hi[k], v[k]);
  }
  const auto img = direct_projection(pts, cloud, 12, 12);
  for (int y = 0; y < 12; ++y)
    for (int x = 0; x < 12; ++x) {
      const ProjectedPoint* best = nullptr;
      for (const auto& p : pts)
        if (int(p.u) == x && int(p.v) == y && (!best || p.depth < best->depth)) best = &p;
      for (int k = 0; k < 3; ++k) {
        double expect = 0.0;
        if (best) {
          const auto& q = cloud.points[best->source_index];
          const double v[3] = {q.x, q.y, q.z};
          expect = (v[k] - lo[k]) / (hi[k] - lo[k]);
        }
        EXPECT_NEAR(img.at(k, x, y), expect, 1e-12);
        EXPECT_GE(img.at(k, x, y), 0.0);
        EXPECT_LE(img.at(k, x, y), 1.0);
      }
    }
}
