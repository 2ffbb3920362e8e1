#pragma once

#include <cstdint>

namespace plard::kernels {

/// Geometry of one 2-D cross-correlation over a single batch item.
struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  int in_h = 0;
  int in_w = 0;

  int out_h() const { return (in_h + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1; }
  int out_w() const { return (in_w + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1; }
  std::int64_t macs() const {
    return std::int64_t(out_channels) * in_channels * kernel * kernel * out_h() * out_w();
  }
};

// OpenMP kernels. Work is split so that every output element is produced by
// exactly one thread with a fixed accumulation order: results do not depend
// on the thread count.

/// out = conv(in, weight) + bias. `out` is overwritten.
void conv2d_forward(const ConvGeometry& g, const double* in, const double* weight, const double* bias, double* out);

/// Accumulates into d_in / d_weight / d_bias; any of them may be null.
void conv2d_backward(const ConvGeometry& g, const double* in, const double* weight, const double* d_out,
                     double* d_in, double* d_weight, double* d_bias);

namespace serial {
void conv2d_forward(const ConvGeometry& g, const double* in, const double* weight, const double* bias, double* out);
void conv2d_backward(const ConvGeometry& g, const double* in, const double* weight, const double* d_out,
                     double* d_in, double* d_weight, double* d_bias);
}  // namespace serial

}  // namespace plard::kernels
