#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plard/layers.hpp"
#include "plard/tensor.hpp"

namespace plard::nn {

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-4;
  std::size_t samples_per_tensor = 50;  // all coordinates when a tensor is smaller
  std::uint64_t seed = 0;
  /// Gradients below this magnitude are compared absolutely: the relative
  /// error denominator is max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
};

struct GradCheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates whose perturbation crossed a kink
  std::vector<GradCheckEntry> failures;  // entries at or above tolerance
  bool passed = false;
};

/// Compares reverse-mode gradients of `loss_fn` against fourth-order central
/// differences on a seeded subsample of each parameter tensor. `loss_fn`
/// must rebuild the graph on every call and return a scalar. A coordinate
/// whose stencil changes any ReLU or max-pool decision sits on a kink where
/// the derivative does not exist; the step is shrunk twice by 10x, then the
/// coordinate is skipped and another one is drawn.
GradCheckReport gradient_check(const std::function<Tensor()>& loss_fn, ParameterStore& params,
                               const GradCheckOptions& options = {});

}  // namespace plard::nn
