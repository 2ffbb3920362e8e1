#include "plard/layers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "plard/error.hpp"
#include "plard/file_io.hpp"

namespace plard::nn {
namespace {

constexpr char kMagic[8] = {'P', 'L', 'A', 'R', 'D', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::vector<std::byte>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> b) : bytes_(b) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint64_t>(bytes_[pos_ + i]);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint(4)); }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(n, '\0');
    std::memcpy(s.data(), bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::TruncatedRecord, "checkpoint ends early");
  }
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor ParameterStore::add(const std::string& name, Tensor tensor) {
  if (contains(name)) throw Error(ErrorCode::InvalidConfig, "duplicate parameter name '" + name + "'");
  tensor.set_requires_grad(true);
  entries_.emplace_back(name, tensor);
  return tensor;
}

Tensor ParameterStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw Error(ErrorCode::MissingKey, "no parameter named '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

ConvLayer make_conv(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                    int dilation) {
  if (kernel % 2 == 0) throw Error(ErrorCode::InvalidConfig, "conv kernel must be odd");
  const Shape ws{out_channels, in_channels, kernel, kernel};
  const double stddev = std::sqrt(2.0 / (double(in_channels) * kernel * kernel));
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<double> w(ws.numel());
  for (double& v : w) v = normal(store.rng());

  ConvLayer layer;
  layer.weight = store.add(name + ".weight", Tensor(ws, std::move(w)));
  layer.bias = store.add(name + ".bias", Tensor(Shape{1, out_channels, 1, 1}, 0.0));
  layer.dilation = dilation;
  layer.padding = dilation * (kernel - 1) / 2;
  return layer;
}

std::vector<std::byte> serialize_checkpoint(const ParameterStore& store) {
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store.entries()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    for (char c : name) out.push_back(static_cast<std::byte>(c));
    const auto& s = t.shape();
    for (int d : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& e : store.entries())
    for (double v : e.second.data()) put_f64(out, v);
  return out;
}

void deserialize_checkpoint(ParameterStore& store, std::span<const std::byte> bytes) {
  Reader r(bytes);
  if (r.str(8) != std::string(kMagic, 8)) throw Error(ErrorCode::InvalidConfig, "not a PLARD checkpoint");
  if (const auto v = r.u32(); v != kVersion)
    throw Error(ErrorCode::InvalidConfig, "unsupported checkpoint version " + std::to_string(v));
  const std::uint32_t count = r.u32();
  if (count != store.size())
    throw Error(ErrorCode::ShapeMismatch, "checkpoint holds " + std::to_string(count) + " tensors, model has " +
                                              std::to_string(store.size()));
  std::vector<Tensor> targets;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str(r.u32());
    Shape s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    const auto& [expected_name, t] = store.entries()[i];
    if (name != expected_name || !(s == t.shape()))
      throw Error(ErrorCode::ShapeMismatch, "checkpoint entry '" + name + "' " + s.str() + " does not match '" +
                                                expected_name + "' " + t.shape().str());
    targets.push_back(t);
  }
  for (auto& t : targets)
    for (double& v : t.data()) v = r.f64();
  if (!r.done()) throw Error(ErrorCode::InvalidConfig, "trailing bytes after checkpoint payload");
}

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  write_file_bytes(path, serialize_checkpoint(store));
}

void load_checkpoint(ParameterStore& store, const std::string& path) {
  deserialize_checkpoint(store, read_file_bytes(path));
}

}  // namespace plard::nn
