#include "plard/optim.hpp"

namespace plard::nn {

void sgd_step(ParameterStore& params, double lr) {
  for (auto& [name, t] : params.entries()) {
    Tensor p = t;
    if (!p.has_grad()) continue;
    auto d = p.data();
    auto g = p.grad();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr * g[i];
    p.zero_grad();
  }
}

void SgdOptimizer::step(ParameterStore& params, double lr) {
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    for (const auto& e : params.entries()) velocity_.emplace_back(e.second.numel(), 0.0);
  }
  std::size_t k = 0;
  for (auto& [name, t] : params.entries()) {
    Tensor p = t;
    auto& vel = velocity_[k++];
    if (!p.has_grad()) continue;
    auto d = p.data();
    auto g = p.grad();
    for (std::size_t i = 0; i < d.size(); ++i) {
      vel[i] = momentum_ * vel[i] + (g[i] + weight_decay_ * d[i]);
      d[i] -= lr * vel[i];
    }
    p.zero_grad();
  }
}

}  // namespace plard::nn
