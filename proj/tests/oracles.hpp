#pragma once

// Straightforward re-implementations used as references by the tests. They
// share no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "plard/adt.hpp"
#include "plard/evalkit.hpp"
#include "plard/lidar_io.hpp"

namespace oracle {

/// Mean distance-weighted absolute altitude difference over occupied
/// neighbors in a window x window box, evaluated literally.
inline std::vector<double> adt(const plard::AltitudeMap& m, int window) {
  std::vector<double> out(static_cast<std::size_t>(m.width) * m.height, 0.0);
  const int r = window / 2;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m.occupied[static_cast<std::size_t>(y) * m.width + x]) continue;
      const double z = m.altitude[static_cast<std::size_t>(y) * m.width + x];
      double sum = 0.0;
      int count = 0;
      for (int ny = y - r; ny <= y + r; ++ny)
        for (int nx = x - r; nx <= x + r; ++nx) {
          if (nx == x && ny == y) continue;
          if (nx < 0 || ny < 0 || nx >= m.width || ny >= m.height) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * m.width + nx;
          if (!m.occupied[j]) continue;
          const double dist = std::sqrt(double((nx - x) * (nx - x) + (ny - y) * (ny - y)));
          sum += std::fabs(z - m.altitude[j]) / dist;
          ++count;
        }
      out[static_cast<std::size_t>(y) * m.width + x] = count > 0 ? sum / count : 0.0;
    }
  return out;
}

inline plard::AltitudeMap random_altitude_map(std::mt19937_64& rng, int w, int h, double occupancy) {
  plard::AltitudeMap m(w, h);
  std::uniform_real_distribution<double> u(0.0, 1.0), alt(-2.0, 3.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (u(rng) < occupancy) m.set(x, y, alt(rng));
  return m;
}

/// Scalar pinhole chain: extrinsic, then rectification, then projection.
struct Projected {
  bool kept = false;
  double u = 0, v = 0, depth = 0;
};

inline Projected project_point(const plard::CalibrationSet& c, double x, double y, double z, int w, int h) {
  double cam[3];
  for (int r = 0; r < 3; ++r)
    cam[r] = c.extrinsic(r, 0) * x + c.extrinsic(r, 1) * y + c.extrinsic(r, 2) * z + c.extrinsic(r, 3);
  double rect[3];
  for (int r = 0; r < 3; ++r) rect[r] = c.rect(r, 0) * cam[0] + c.rect(r, 1) * cam[1] + c.rect(r, 2) * cam[2];
  double img[3];
  for (int r = 0; r < 3; ++r) img[r] = c.proj(r, 0) * rect[0] + c.proj(r, 1) * rect[1] + c.proj(r, 2) * rect[2] + c.proj(r, 3);
  Projected p;
  if (rect[2] <= 0.0 || img[2] == 0.0) return p;
  p.u = img[0] / img[2];
  p.v = img[1] / img[2];
  p.depth = rect[2];
  p.kept = p.u >= 0.0 && p.u < w && p.v >= 0.0 && p.v < h;
  return p;
}

/// Direct 7-loop cross-correlation, NCHW input, (out,in,k,k) weights.
inline std::vector<double> conv2d(const std::vector<double>& in, int n, int c, int h, int w,
                                  const std::vector<double>& weight, const std::vector<double>& bias, int out_c, int k,
                                  int stride, int pad, int dil, int& oh, int& ow) {
  oh = (h + 2 * pad - dil * (k - 1) - 1) / stride + 1;
  ow = (w + 2 * pad - dil * (k - 1) - 1) / stride + 1;
  std::vector<double> out(static_cast<std::size_t>(n) * out_c * oh * ow, 0.0);
  for (int b = 0; b < n; ++b)
    for (int o = 0; o < out_c; ++o)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
          double s = bias[static_cast<std::size_t>(o)];
          for (int i = 0; i < c; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = y * stride - pad + ky * dil;
                const int ix = x * stride - pad + kx * dil;
                if (iy < 0 || ix < 0 || iy >= h || ix >= w) continue;
                s += in[((static_cast<std::size_t>(b) * c + i) * h + iy) * w + ix] *
                     weight[((static_cast<std::size_t>(o) * c + i) * k + ky) * k + kx];
              }
          out[((static_cast<std::size_t>(b) * out_c + o) * oh + y) * ow + x] = s;
        }
  return out;
}

/// Confusion counts at one threshold, by scanning every pixel.
struct Counts {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline Counts counts_at(const plard::ConfidenceMap& pred, const plard::RoadMask& gt, double t) {
  Counts c;
  for (int y = 0; y < gt.height; ++y)
    for (int x = 0; x < gt.width; ++x) {
      const auto l = gt.at(x, y);
      if (l == plard::Label::Ignore) continue;
      const bool positive = pred.at(x, y) >= t;
      if (l == plard::Label::Road)
        positive ? ++c.tp : ++c.fn;
      else
        positive ? ++c.fp : ++c.tn;
    }
  return c;
}

struct Metrics {
  std::vector<Counts> counts;
  double max_f = 0, ap = 0, pre = 0, rec = 0, fpr = 0, fnr = 0, threshold = 0;
};

/// Exhaustive sweep: counts recomputed from scratch at every threshold.
inline Metrics sweep(const plard::ConfidenceMap& pred, const plard::RoadMask& gt, int n, int anchors = 41) {
  Metrics m;
  std::vector<double> prec(static_cast<std::size_t>(n)), rec(static_cast<std::size_t>(n));
  double best = -1.0;
  int bi = 0;
  for (int i = 0; i < n; ++i) {
    const Counts c = counts_at(pred, gt, double(i) / double(n - 1));
    m.counts.push_back(c);
    const double p = (c.tp + c.fp) > 0 ? double(c.tp) / double(c.tp + c.fp) : 0.0;
    const double r = double(c.tp) / double(c.tp + c.fn);
    prec[static_cast<std::size_t>(i)] = p;
    rec[static_cast<std::size_t>(i)] = r;
    const double f = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    if (f > best) {
      best = f;
      bi = i;
    }
  }
  double ap = 0.0;
  for (int j = 0; j < anchors; ++j) {
    const double a = double(j) / double(anchors - 1);
    double bp = 0.0;
    for (int i = 0; i < n; ++i)
      if (rec[static_cast<std::size_t>(i)] >= a) bp = std::max(bp, prec[static_cast<std::size_t>(i)]);
    ap += bp;
  }
  const Counts& c = m.counts[static_cast<std::size_t>(bi)];
  m.max_f = 100.0 * best;
  m.ap = 100.0 * ap / anchors;
  m.pre = 100.0 * prec[static_cast<std::size_t>(bi)];
  m.rec = 100.0 * rec[static_cast<std::size_t>(bi)];
  m.fpr = (c.fp + c.tn) > 0 ? 100.0 * double(c.fp) / double(c.fp + c.tn) : 0.0;
  m.fnr = 100.0 * double(c.fn) / double(c.tp + c.fn);
  m.threshold = double(bi) / double(n - 1);
  return m;
}

}  // namespace oracle
