#pragma once

#include <vector>

#include "plard/layers.hpp"

namespace plard::nn {

/// Plain step: p <- p - lr * grad, then grads are zeroed.
void sgd_step(ParameterStore& params, double lr);

/// SGD with heavy-ball momentum and L2 weight decay:
///   v <- momentum * v + (grad + decay * p);  p <- p - lr * v
class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  void step(ParameterStore& params, double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace plard::nn
