#include "citgan/core/autograd.hpp"

#include <unordered_set>

#include "citgan/core/errors.hpp"

namespace citgan {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor& detail::Node::grad_buffer() {
  if (grad.size() != value.size()) grad = Tensor::zeros_like(value);
  return grad;
}

Var Var::leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return Var(std::move(n));
}

Var Var::from_op(Tensor value, std::vector<Var> parents, std::function<void(detail::Node&)> backward) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  if (g_grad_enabled) {
    for (const Var& p : parents) {
      if (p.defined() && p.node_->requires_grad) {
        n->requires_grad = true;
        break;
      }
    }
  }
  if (n->requires_grad) {
    n->parents.reserve(parents.size());
    for (Var& p : parents) n->parents.push_back(std::move(p.node_));
    n->backward = std::move(backward);
  }
  return Var(std::move(n));
}

const Tensor& Var::value() const {
  CITGAN_REQUIRE(node_, "use of an undefined Var");
  return node_->value;
}

Tensor& Var::mutable_value() {
  CITGAN_REQUIRE(node_, "use of an undefined Var");
  return node_->value;
}

bool Var::requires_grad() const { return node_ && node_->requires_grad; }

void Var::set_requires_grad(bool on) {
  CITGAN_REQUIRE(node_ && node_->parents.empty(), "requires_grad can only be toggled on leaves");
  node_->requires_grad = on;
}

bool Var::has_grad() const { return node_ && node_->grad.size() == node_->value.size(); }

const Tensor& Var::grad() const {
  CITGAN_REQUIRE(has_grad(), "Var has no gradient");
  return node_->grad;
}

Tensor& Var::mutable_grad() {
  CITGAN_REQUIRE(node_, "use of an undefined Var");
  return node_->grad_buffer();
}

void Var::zero_grad() {
  if (node_ && !node_->grad.empty()) node_->grad.fill(0.0);
}

void Var::backward() const {
  CITGAN_REQUIRE(node_, "backward() on an undefined Var");
  CITGAN_REQUIRE(node_->value.size() == 1, "backward() needs a scalar root, got " + node_->value.shape_string());
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order with parents first.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward && n->grad.size() == n->value.size()) n->backward(*n);
  }
}

}  // namespace citgan
