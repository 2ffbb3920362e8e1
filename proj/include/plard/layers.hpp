#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plard/tensor.hpp"

namespace plard::nn {

/// Named, ordered collection of trainable tensors.
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed), rng_(seed) {}

  /// Registers a tensor as trainable. Names must be unique.
  Tensor add(const std::string& name, Tensor tensor);
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Tensor>> entries_;
};

struct ConvLayer {
  Tensor weight;  // (out, in, k, k)
  Tensor bias;    // (1, out, 1, 1)
  int stride = 1;
  int padding = 0;
  int dilation = 1;

  int out_channels() const { return weight.shape().n; }
  int in_channels() const { return weight.shape().c; }
  int kernel() const { return weight.shape().h; }
};

/// Creates a "same"-padded conv (padding = dilation*(k-1)/2) with fan-in
/// scaled normal weights (std = sqrt(2/fan_in)) and zero bias, registered as
/// `<name>.weight` / `<name>.bias`.
ConvLayer make_conv(ParameterStore& store, const std::string& name, int in_channels, int out_channels, int kernel,
                    int dilation = 1);

// Checkpoint: "PLARDCKP" magic, u32 version, u32 count, name table
// (u32 length, bytes, 4 x u32 dims), then float64 little-endian payloads in
// table order.
std::vector<std::byte> serialize_checkpoint(const ParameterStore& store);
/// Copies values into the store's tensors; names and shapes must match.
void deserialize_checkpoint(ParameterStore& store, std::span<const std::byte> bytes);

void save_checkpoint(const ParameterStore& store, const std::string& path);
void load_checkpoint(ParameterStore& store, const std::string& path);

}  // namespace plard::nn
