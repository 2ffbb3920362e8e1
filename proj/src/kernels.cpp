#include "plard/kernels.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace plard::kernels {
namespace {

constexpr int kTile = 256;

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel == 1 && g.stride == 1 && g.padding == 0;
}

// Column matrix: row (ci, ky, kx), column output pixel.
std::vector<double> im2col(const ConvGeometry& g, const double* in) {
  const int oh = g.out_h(), ow = g.out_w();
  const int k = g.kernel;
  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
  std::vector<double> col(static_cast<std::size_t>(g.in_channels) * k * k * cols);
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < g.in_channels; ++ci) {
    const double* plane = in + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        double* row = col.data() + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.padding + ky * g.dilation;
          double* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.padding + kx * g.dilation;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : 0.0;
          }
        }
      }
  }
  return col;
}

void col2im_add(const ConvGeometry& g, const double* col, double* d_in) {
  const int oh = g.out_h(), ow = g.out_w();
  const int k = g.kernel;
  const std::size_t cols = static_cast<std::size_t>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < g.in_channels; ++ci) {
    double* plane = d_in + static_cast<std::size_t>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col + ((static_cast<std::size_t>(ci) * k + ky) * k + kx) * cols;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.padding + ky * g.dilation;
          if (iy < 0 || iy >= g.in_h) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          const double* src = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.padding + kx * g.dilation;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
  }
}

// Fixed-lane dot product; lane split is part of the kernel definition so the
// result is independent of scheduling.
inline double dot(const double* a, const double* b, int n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += a[i] * b[i];
    acc[1] += a[i + 1] * b[i + 1];
    acc[2] += a[i + 2] * b[i + 2];
    acc[3] += a[i + 3] * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, const double* in, const double* weight, const double* bias, double* out) {
  const std::size_t cols = static_cast<std::size_t>(g.out_h()) * g.out_w();
  const int kk = g.in_channels * g.kernel * g.kernel;
  std::vector<double> scratch;
  const double* col = in;
  if (!is_pointwise(g)) {
    scratch = im2col(g, in);
    col = scratch.data();
  }
  const int tiles = static_cast<int>((cols + kTile - 1) / kTile);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tiles; ++t) {
    const std::size_t p0 = static_cast<std::size_t>(t) * kTile;
    const int len = static_cast<int>(std::min<std::size_t>(kTile, cols - p0));
    for (int oc = 0; oc < g.out_channels; ++oc) {
      double* o = out + static_cast<std::size_t>(oc) * cols + p0;
      const double b = bias ? bias[oc] : 0.0;
      std::fill(o, o + len, b);
      const double* wrow = weight + static_cast<std::size_t>(oc) * kk;
      for (int r = 0; r < kk; ++r) {
        const double w = wrow[r];
        const double* c = col + static_cast<std::size_t>(r) * cols + p0;
        for (int p = 0; p < len; ++p) o[p] += w * c[p];
      }
    }
  }
}

void conv2d_backward(const ConvGeometry& g, const double* in, const double* weight, const double* d_out,
                     double* d_in, double* d_weight, double* d_bias) {
  const std::size_t cols = static_cast<std::size_t>(g.out_h()) * g.out_w();
  const int kk = g.in_channels * g.kernel * g.kernel;
  const int tiles = static_cast<int>((cols + kTile - 1) / kTile);

  if (d_bias) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < g.out_channels; ++oc) {
      const double* go = d_out + static_cast<std::size_t>(oc) * cols;
      double s = 0.0;
      for (std::size_t p = 0; p < cols; ++p) s += go[p];
      d_bias[oc] += s;
    }
  }

  if (d_weight) {
    std::vector<double> scratch;
    const double* col = in;
    if (!is_pointwise(g)) {
      scratch = im2col(g, in);
      col = scratch.data();
    }
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < g.out_channels; ++oc) {
      const double* go = d_out + static_cast<std::size_t>(oc) * cols;
      double* gw = d_weight + static_cast<std::size_t>(oc) * kk;
      for (int t = 0; t < tiles; ++t) {
        const std::size_t p0 = static_cast<std::size_t>(t) * kTile;
        const int len = static_cast<int>(std::min<std::size_t>(kTile, cols - p0));
        for (int r = 0; r < kk; ++r) gw[r] += dot(go + p0, col + static_cast<std::size_t>(r) * cols + p0, len);
      }
    }
  }

  if (d_in) {
    const bool pointwise = is_pointwise(g);
    std::vector<double> d_col(pointwise ? 0 : static_cast<std::size_t>(kk) * cols, 0.0);
    double* dst = pointwise ? d_in : d_col.data();
#pragma omp parallel for schedule(static)
    for (int t = 0; t < tiles; ++t) {
      const std::size_t p0 = static_cast<std::size_t>(t) * kTile;
      const int len = static_cast<int>(std::min<std::size_t>(kTile, cols - p0));
      for (int r = 0; r < kk; ++r) {
        double* dc = dst + static_cast<std::size_t>(r) * cols + p0;
        for (int oc = 0; oc < g.out_channels; ++oc) {
          const double w = weight[static_cast<std::size_t>(oc) * kk + r];
          const double* go = d_out + static_cast<std::size_t>(oc) * cols + p0;
          for (int p = 0; p < len; ++p) dc[p] += w * go[p];
        }
      }
    }
    if (!pointwise) col2im_add(g, d_col.data(), d_in);
  }
}

namespace serial {

void conv2d_forward(const ConvGeometry& g, const double* in, const double* weight, const double* bias, double* out) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int oc = 0; oc < g.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double s = bias ? bias[oc] : 0.0;
        for (int ci = 0; ci < g.in_channels; ++ci)
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.padding + ky * g.dilation;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * g.stride - g.padding + kx * g.dilation;
              if (ix < 0 || ix >= g.in_w) continue;
              s += weight[((static_cast<std::size_t>(oc) * g.in_channels + ci) * k + ky) * k + kx] *
                   in[(static_cast<std::size_t>(ci) * g.in_h + iy) * g.in_w + ix];
            }
          }
        out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = s;
      }
}

void conv2d_backward(const ConvGeometry& g, const double* in, const double* weight, const double* d_out,
                     double* d_in, double* d_weight, double* d_bias) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int oc = 0; oc < g.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const double go = d_out[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
        if (d_bias) d_bias[oc] += go;
        for (int ci = 0; ci < g.in_channels; ++ci)
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * g.stride - g.padding + ky * g.dilation;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * g.stride - g.padding + kx * g.dilation;
              if (ix < 0 || ix >= g.in_w) continue;
              const std::size_t wi = ((static_cast<std::size_t>(oc) * g.in_channels + ci) * k + ky) * k + kx;
              const std::size_t ii = (static_cast<std::size_t>(ci) * g.in_h + iy) * g.in_w + ix;
              if (d_weight) d_weight[wi] += go * in[ii];
              if (d_in) d_in[ii] += go * weight[wi];
            }
          }
      }
}

}  // namespace serial
}  // namespace plard::kernels
