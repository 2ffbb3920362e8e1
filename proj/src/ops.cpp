#include "plard/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "plard/error.hpp"
#include "plard/kernels.hpp"

namespace plard::nn {
namespace {

thread_local std::int64_t g_macs = 0;
thread_local BranchRecorder* g_recorder = nullptr;

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!(a.shape() == b.shape()))
    throw Error(ErrorCode::ShapeMismatch,
                std::string(op) + ": shapes " + a.shape().str() + " and " + b.shape().str() + " differ");
}

}  // namespace

MacCounter::MacCounter() : start_(g_macs) {}
std::int64_t MacCounter::count() const { return g_macs - start_; }

BranchRecorder::BranchRecorder() : previous_(g_recorder) { g_recorder = this; }
BranchRecorder::~BranchRecorder() { g_recorder = previous_; }

void record_branch(std::uint64_t value) {
  if (!g_recorder) return;
  g_recorder->hash_ = (g_recorder->hash_ ^ value) * 1099511628211ull;
}

Tensor conv2d(const Tensor& input, const ConvLayer& layer) {
  const Shape& s = input.shape();
  if (s.c != layer.in_channels())
    throw Error(ErrorCode::ShapeMismatch, "conv2d: input has " + std::to_string(s.c) + " channels, layer expects " +
                                              std::to_string(layer.in_channels()));
  kernels::ConvGeometry g;
  g.in_channels = s.c;
  g.out_channels = layer.out_channels();
  g.kernel = layer.kernel();
  g.stride = layer.stride;
  g.padding = layer.padding;
  g.dilation = layer.dilation;
  g.in_h = s.h;
  g.in_w = s.w;
  if (g.out_h() <= 0 || g.out_w() <= 0) throw Error(ErrorCode::ShapeMismatch, "conv2d: empty output");
  const Shape os{s.n, g.out_channels, g.out_h(), g.out_w()};
  const std::size_t in_item = static_cast<std::size_t>(s.c) * s.h * s.w;
  const std::size_t out_item = static_cast<std::size_t>(os.c) * os.h * os.w;

  std::vector<double> out(os.numel());
  const double* bias = layer.bias.defined() ? layer.bias.data().data() : nullptr;
  for (int n = 0; n < s.n; ++n)
    kernels::conv2d_forward(g, input.data().data() + n * in_item, layer.weight.data().data(), bias,
                            out.data() + n * out_item);
  g_macs += g.macs() * s.n;

  std::vector<Tensor> parents{input, layer.weight};
  if (layer.bias.defined()) parents.push_back(layer.bias);
  return make_result(os, std::move(out), std::move(parents), [g, in_item, out_item, batch = s.n](detail::Node& self) {
    const auto& x = self.parents[0];
    const auto& w = self.parents[1];
    double* gx = grad_target(x);
    double* gw = grad_target(w);
    double* gb = self.parents.size() > 2 ? grad_target(self.parents[2]) : nullptr;
    for (int n = 0; n < batch; ++n)
      kernels::conv2d_backward(g, x->data.data() + n * in_item, w->data.data(), self.grad.data() + n * out_item,
                               gx ? gx + n * in_item : nullptr, gw, gb);
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  if (g_recorder)
    for (std::size_t i = 0; i < out.size(); ++i) record_branch(in[i] > 0.0);
  return make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    const auto& p = self.parents[0];
    double* g = grad_target(p);
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (p->data[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same(a, b, "add");
  std::vector<double> out(a.numel());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (const auto& p : self.parents)
      if (double* g = grad_target(p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor mul_elementwise(const Tensor& a, const Tensor& b) {
  require_same(a, b, "mul_elementwise");
  std::vector<double> out(a.numel());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    if (double* g = grad_target(pa))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb->data[i];
    if (double* g = grad_target(pb))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa->data[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.numel());
  auto da = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * da[i];
  return make_result(a.shape(), std::move(out), {a}, [s](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw Error(ErrorCode::ShapeMismatch, "concat_channels: " + sa.str() + " vs " + sb.str());
  const Shape os{sa.n, sa.c + sb.c, sa.h, sa.w};
  const std::size_t ia = static_cast<std::size_t>(sa.c) * sa.plane();
  const std::size_t ib = static_cast<std::size_t>(sb.c) * sb.plane();
  std::vector<double> out(os.numel());
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a.data().data() + n * ia, ia, out.data() + n * (ia + ib));
    std::copy_n(b.data().data() + n * ib, ib, out.data() + n * (ia + ib) + ia);
  }
  return make_result(os, std::move(out), {a, b}, [ia, ib, batch = sa.n](detail::Node& self) {
    double* ga = grad_target(self.parents[0]);
    double* gb = grad_target(self.parents[1]);
    for (int n = 0; n < batch; ++n) {
      const double* src = self.grad.data() + n * (ia + ib);
      if (ga)
        for (std::size_t i = 0; i < ia; ++i) ga[n * ia + i] += src[i];
      if (gb)
        for (std::size_t i = 0; i < ib; ++i) gb[n * ib + i] += src[ia + i];
    }
  });
}

Tensor slice_channels(const Tensor& x, int begin, int count) {
  const Shape& s = x.shape();
  if (begin < 0 || count <= 0 || begin + count > s.c)
    throw Error(ErrorCode::ShapeMismatch, "slice_channels out of range for " + s.str());
  const Shape os{s.n, count, s.h, s.w};
  const std::size_t plane = s.plane();
  std::vector<double> out(os.numel());
  for (int n = 0; n < s.n; ++n)
    std::copy_n(x.data().data() + (static_cast<std::size_t>(n) * s.c + begin) * plane, count * plane,
                out.data() + static_cast<std::size_t>(n) * count * plane);
  return make_result(os, std::move(out), {x}, [s, begin, count](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    const std::size_t plane = s.plane();
    for (int n = 0; n < s.n; ++n) {
      const double* src = self.grad.data() + static_cast<std::size_t>(n) * count * plane;
      double* dst = g + (static_cast<std::size_t>(n) * s.c + begin) * plane;
      for (std::size_t i = 0; i < count * plane; ++i) dst[i] += src[i];
    }
  });
}

Tensor maxpool2(const Tensor& x) {
  const Shape& s = x.shape();
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  if (os.h == 0 || os.w == 0) throw Error(ErrorCode::ShapeMismatch, "maxpool2 on " + s.str());
  std::vector<double> out(os.numel());
  std::vector<std::size_t> arg(os.numel());
  auto in = x.data();
  std::size_t o = 0;
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const std::size_t base = static_cast<std::size_t>(nc) * s.plane();
    for (int y = 0; y < os.h; ++y)
      for (int xx = 0; xx < os.w; ++xx, ++o) {
        std::size_t best = base + static_cast<std::size_t>(2 * y) * s.w + 2 * xx;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t i = base + static_cast<std::size_t>(2 * y + dy) * s.w + 2 * xx + dx;
            if (in[i] > in[best]) best = i;
          }
        out[o] = in[best];
        arg[o] = best;
        record_branch(best);
      }
  }
  return make_result(os, std::move(out), {x}, [arg = std::move(arg)](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
  });
}

namespace {

struct Tap {
  int i0, i1;
  double w0, w1;
};

std::vector<Tap> bilinear_taps(int in, int out) {
  std::vector<Tap> taps(static_cast<std::size_t>(out));
  const double ratio = double(in) / double(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, double(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    const double f = src - i0;
    taps[static_cast<std::size_t>(o)] = {i0, i1, 1.0 - f, f};
  }
  return taps;
}

}  // namespace

Tensor upsample_bilinear(const Tensor& x, int out_h, int out_w) {
  const Shape& s = x.shape();
  if (out_h <= 0 || out_w <= 0) throw Error(ErrorCode::ShapeMismatch, "upsample_bilinear to empty size");
  const Shape os{s.n, s.c, out_h, out_w};
  auto ty = bilinear_taps(s.h, out_h);
  auto tx = bilinear_taps(s.w, out_w);
  std::vector<double> out(os.numel());
  auto in = x.data();
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const double* src = in.data() + static_cast<std::size_t>(nc) * s.plane();
    double* dst = out.data() + static_cast<std::size_t>(nc) * os.plane();
    for (int y = 0; y < out_h; ++y) {
      const Tap& a = ty[static_cast<std::size_t>(y)];
      const double* r0 = src + static_cast<std::size_t>(a.i0) * s.w;
      const double* r1 = src + static_cast<std::size_t>(a.i1) * s.w;
      for (int xx = 0; xx < out_w; ++xx) {
        const Tap& b = tx[static_cast<std::size_t>(xx)];
        dst[static_cast<std::size_t>(y) * out_w + xx] =
            a.w0 * (b.w0 * r0[b.i0] + b.w1 * r0[b.i1]) + a.w1 * (b.w0 * r1[b.i0] + b.w1 * r1[b.i1]);
      }
    }
  }
  return make_result(os, std::move(out), {x}, [s, os, ty = std::move(ty), tx = std::move(tx)](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    for (int nc = 0; nc < s.n * s.c; ++nc) {
      double* dst = g + static_cast<std::size_t>(nc) * s.plane();
      const double* src = self.grad.data() + static_cast<std::size_t>(nc) * os.plane();
      for (int y = 0; y < os.h; ++y) {
        const Tap& a = ty[static_cast<std::size_t>(y)];
        double* r0 = dst + static_cast<std::size_t>(a.i0) * s.w;
        double* r1 = dst + static_cast<std::size_t>(a.i1) * s.w;
        for (int xx = 0; xx < os.w; ++xx) {
          const Tap& b = tx[static_cast<std::size_t>(xx)];
          const double go = src[static_cast<std::size_t>(y) * os.w + xx];
          r0[b.i0] += a.w0 * b.w0 * go;
          r0[b.i1] += a.w0 * b.w1 * go;
          r1[b.i0] += a.w1 * b.w0 * go;
          r1[b.i1] += a.w1 * b.w1 * go;
        }
      }
    }
  });
}

Tensor softmax_channels(const Tensor& x) {
  const Shape& s = x.shape();
  const std::size_t plane = s.plane();
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * s.c * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      double mx = in[base + p];
      for (int c = 1; c < s.c; ++c) mx = std::max(mx, in[base + c * plane + p]);
      double z = 0.0;
      for (int c = 0; c < s.c; ++c) {
        const double e = std::exp(in[base + c * plane + p] - mx);
        out[base + c * plane + p] = e;
        z += e;
      }
      for (int c = 0; c < s.c; ++c) out[base + c * plane + p] /= z;
    }
  }
  return make_result(s, std::move(out), {x}, [s](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    const std::size_t plane = s.plane();
    const auto& y = self.data;
    const auto& gy = self.grad;
    for (int n = 0; n < s.n; ++n) {
      const std::size_t base = static_cast<std::size_t>(n) * s.c * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        double dotp = 0.0;
        for (int c = 0; c < s.c; ++c) dotp += gy[base + c * plane + p] * y[base + c * plane + p];
        for (int c = 0; c < s.c; ++c) {
          const std::size_t i = base + c * plane + p;
          g[i] += y[i] * (gy[i] - dotp);
        }
      }
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape& s = x.shape();
  const Shape os{s.n, s.c, 1, 1};
  const std::size_t plane = s.plane();
  std::vector<double> out(os.numel());
  auto in = x.data();
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    double sum = 0.0;
    for (std::size_t p = 0; p < plane; ++p) sum += in[nc * plane + p];
    out[static_cast<std::size_t>(nc)] = sum / double(plane);
  }
  return make_result(os, std::move(out), {x}, [plane](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    for (std::size_t nc = 0; nc < self.grad.size(); ++nc) {
      const double go = self.grad[nc] / double(plane);
      for (std::size_t p = 0; p < plane; ++p) g[nc * plane + p] += go;
    }
  });
}

Tensor broadcast_spatial(const Tensor& x, int h, int w) {
  const Shape& s = x.shape();
  if (s.h != 1 || s.w != 1) throw Error(ErrorCode::ShapeMismatch, "broadcast_spatial expects (n,c,1,1), got " + s.str());
  const Shape os{s.n, s.c, h, w};
  const std::size_t plane = os.plane();
  std::vector<double> out(os.numel());
  auto in = x.data();
  for (std::size_t nc = 0; nc < in.size(); ++nc) std::fill_n(out.data() + nc * plane, plane, in[nc]);
  return make_result(os, std::move(out), {x}, [plane](detail::Node& self) {
    double* g = grad_target(self.parents[0]);
    const std::size_t count = self.grad.size() / plane;
    for (std::size_t nc = 0; nc < count; ++nc) {
      double sum = 0.0;
      for (std::size_t p = 0; p < plane; ++p) sum += self.grad[nc * plane + p];
      g[nc] += sum;
    }
  });
}

Tensor cross_entropy_log10(const Tensor& pred, const Tensor& target, const std::optional<Tensor>& mask) {
  require_same(pred, target, "cross_entropy_log10");
  const Shape& s = pred.shape();
  const std::size_t plane = s.plane();
  if (mask && !(mask->shape() == Shape{s.n, 1, s.h, s.w}))
    throw Error(ErrorCode::ShapeMismatch, "cross_entropy_log10 mask " + mask->shape().str() + " vs " + s.str());

  std::vector<std::uint8_t> counted(static_cast<std::size_t>(s.n) * plane, 1);
  if (mask)
    for (std::size_t i = 0; i < counted.size(); ++i) counted[i] = mask->data()[i] != 0.0;
  std::size_t count = 0;
  for (auto c : counted) count += c;

  auto p = pred.data();
  auto t = target.data();
  double total = 0.0;
  for (int n = 0; n < s.n; ++n)
    for (std::size_t px = 0; px < plane; ++px) {
      if (!counted[n * plane + px]) continue;
      double term = 0.0;
      for (int c = 0; c < s.c; ++c) {
        const std::size_t i = (static_cast<std::size_t>(n) * s.c + c) * plane + px;
        term -= t[i] * std::log10(p[i] + kLogEpsilon);
      }
      total += term;
    }
  const double loss = count ? total / double(count) : 0.0;

  std::vector<Tensor> parents{pred, target};
  return make_result(Shape{1, 1, 1, 1}, {loss}, std::move(parents),
                     [s, plane, count, counted = std::move(counted)](detail::Node& self) {
                       if (count == 0) return;
                       const auto& pp = self.parents[0];
                       const auto& tt = self.parents[1];
                       double* g = grad_target(pp);
                       if (!g) return;
                       const double k = -self.grad[0] / (double(count) * std::numbers::ln10);
                       for (int n = 0; n < s.n; ++n)
                         for (std::size_t px = 0; px < plane; ++px) {
                           if (!counted[n * plane + px]) continue;
                           for (int c = 0; c < s.c; ++c) {
                             const std::size_t i = (static_cast<std::size_t>(n) * s.c + c) * plane + px;
                             g[i] += k * tt->data[i] / (pp->data[i] + kLogEpsilon);
                           }
                         }
                     });
}

}  // namespace plard::nn
