#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "citgan/core/tensor.hpp"

namespace citgan {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Tensor& grad_buffer();
};

}  // namespace detail

/// Handle to a value in a dynamically built computation graph.
///
/// Leaves created with `requires_grad` collect gradients when `backward()` is
/// called on a scalar that depends on them. Intermediate nodes keep their
/// parents alive, so the graph lives exactly as long as its outputs.
class Var {
 public:
  Var() = default;

  static Var leaf(Tensor value, bool requires_grad = false);
  static Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Creates an op result. Parents and backward are only recorded when grad
  /// mode is on and some parent requires a gradient.
  static Var from_op(Tensor value, std::vector<Var> parents, std::function<void(detail::Node&)> backward);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const;
  Tensor& mutable_value();
  const std::vector<int>& shape() const { return value().shape(); }

  bool requires_grad() const;
  void set_requires_grad(bool on);

  bool has_grad() const;
  const Tensor& grad() const;
  Tensor& mutable_grad();
  void zero_grad();

  Var detach() const { return constant(value()); }

  /// Reverse-mode sweep from this scalar.
  void backward() const;

  detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const noexcept { return node_; }

 private:
  explicit Var(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled() noexcept;

/// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace citgan
