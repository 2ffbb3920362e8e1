#include "plard/tensor.hpp"

#include <algorithm>
#include <unordered_set>

#include "plard/error.hpp"

namespace plard::nn {
namespace {
thread_local bool g_grad_enabled = true;
}

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : node_(std::make_shared<detail::Node>()) {
  node_->shape = shape;
  node_->data.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : node_(std::make_shared<detail::Node>()) {
  if (data.size() != shape.numel())
    throw Error(ErrorCode::ShapeMismatch, "data length " + std::to_string(data.size()) + " does not fit shape " +
                                              shape.str());
  node_->shape = shape;
  node_->data = std::move(data);
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

std::span<double> Tensor::grad() {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw Error(ErrorCode::ShapeMismatch, "item() on tensor of shape " + shape().str());
  return node_->data[0];
}

double& Tensor::at(int n, int c, int y, int x) {
  const auto& s = node_->shape;
  return node_->data[((static_cast<std::size_t>(n) * s.c + c) * s.h + y) * s.w + x];
}

double Tensor::at(int n, int c, int y, int x) const {
  const auto& s = node_->shape;
  return node_->data[((static_cast<std::size_t>(n) * s.c + c) * s.h + y) * s.w + x];
}

Tensor Tensor::clone() const {
  Tensor t(shape(), node_->data);
  t.node_->requires_grad = node_->requires_grad;
  return t;
}

void Tensor::backward() {
  // Iterative post-order DFS gives a topological order of the graph.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  std::fill(node_->grad.begin(), node_->grad.end(), 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (detail::Node* n : order) {
    if (!n->backward) continue;
    n->backward = nullptr;
    n->parents.clear();
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                   std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->data = std::move(data);
  const bool track =
      g_grad_enabled && std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(backward);
  }
  return Tensor::from_node(std::move(node));
}

double* grad_target(const std::shared_ptr<detail::Node>& parent) {
  if (!parent->requires_grad) return nullptr;
  parent->ensure_grad();
  return parent->grad.data();
}

}  // namespace plard::nn
