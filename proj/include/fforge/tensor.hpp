#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "fforge/errors.hpp"

namespace fforge {

using Index = std::ptrdiff_t;

/// Extents in N, C, H, W order. Lower-rank values use size-1 axes.
using Shape = std::array<Index, 4>;

template <typename Scalar>
using Buffer = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

inline Index numel(const Shape& s) { return s[0] * s[1] * s[2] * s[3]; }

inline std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '(' << s[0] << ", " << s[1] << ", " << s[2] << ", " << s[3] << ')';
  return os.str();
}

enum class Mode { train, eval };

namespace detail {

template <typename Scalar>
struct Node {
  Shape shape{};
  Buffer<Scalar> value;
  Buffer<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Receives this node's gradient and accumulates into the inputs.
  std::function<void(const Buffer<Scalar>&)> backward;

  void accumulate(const Buffer<Scalar>& delta) {
    if (!requires_grad) return;
    if (grad.size() == 0)
      grad = delta;
    else
      grad += delta;
  }

  // Nodes chain through shared_ptr; unwind iteratively so deep graphs do not
  // exhaust the stack on destruction.
  ~Node() {
    std::vector<std::shared_ptr<Node>> pending = std::move(inputs);
    backward = nullptr;
    while (!pending.empty()) {
      std::shared_ptr<Node> n = std::move(pending.back());
      pending.pop_back();
      if (n && n.use_count() == 1) {
        for (auto& in : n->inputs) pending.push_back(std::move(in));
        n->inputs.clear();
        n->backward = nullptr;
      }
    }
  }
};

}  // namespace detail

/// Dense N×C×H×W array with optional reverse-mode gradient tracking.
///
/// A Tensor is a shared handle: copies alias the same storage and graph node,
/// the way parameters are shared between a network definition and its
/// optimizer. Operations always allocate fresh results.
template <typename Scalar>
class Tensor {
 public:
  using scalar_type = Scalar;
  using NodePtr = std::shared_ptr<detail::Node<Scalar>>;

  Tensor() = default;

  Tensor(const Shape& shape, Buffer<Scalar> values, bool requires_grad = false)
      : node_(std::make_shared<detail::Node<Scalar>>()) {
    for (Index e : shape)
      if (e <= 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
    if (values.size() != numel(shape))
      throw DimensionError("buffer of length " + std::to_string(values.size()) +
                           " does not fill shape " + to_string(shape));
    node_->shape = shape;
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(const Shape& shape, bool requires_grad = false) {
    return Tensor(shape, Buffer<Scalar>::Zero(numel(shape)), requires_grad);
  }

  static Tensor constant(const Shape& shape, Scalar v, bool requires_grad = false) {
    return Tensor(shape, Buffer<Scalar>::Constant(numel(shape), v), requires_grad);
  }

  static Tensor scalar(Scalar v, bool requires_grad = false) {
    return constant({1, 1, 1, 1}, v, requires_grad);
  }

  static Tensor from(const Shape& shape, std::initializer_list<Scalar> values,
                     bool requires_grad = false) {
    Buffer<Scalar> b(static_cast<Index>(values.size()));
    Index k = 0;
    for (Scalar v : values) b[k++] = v;
    return Tensor(shape, std::move(b), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }

  const Shape& shape() const { return node_->shape; }
  Index size() const { return node_->value.size(); }
  Index batch() const { return node_->shape[0]; }
  Index channels() const { return node_->shape[1]; }
  Index height() const { return node_->shape[2]; }
  Index width() const { return node_->shape[3]; }

  const Buffer<Scalar>& value() const { return node_->value; }
  /// In-place access for optimizers and running statistics. Never use on a
  /// tensor whose value has been captured by a live graph.
  Buffer<Scalar>& mutable_value() const { return node_->value; }

  Scalar operator()(Index n, Index c, Index h, Index w) const {
    const Shape& s = node_->shape;
    return node_->value[((n * s[1] + c) * s[2] + h) * s[3] + w];
  }

  Scalar item() const {
    if (size() != 1) throw UsageError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) const { node_->requires_grad = on; }

  bool has_grad() const { return node_->grad.size() != 0; }
  /// Gradient buffer; zeros when nothing has been accumulated yet.
  Buffer<Scalar> grad() const {
    return has_grad() ? node_->grad : Buffer<Scalar>(Buffer<Scalar>::Zero(size()));
  }
  void zero_grad() const { node_->grad.resize(0); }

  /// Same values, cut from the graph.
  Tensor detach() const { return Tensor(shape(), value(), false); }

  /// Independent copy of the values, keeping the requires_grad flag.
  Tensor clone() const { return Tensor(shape(), value(), requires_grad()); }

  /// Populates d(this)/d(leaf) on every reachable leaf that requires grad.
  /// Gradients accumulate additively across calls and fan-out.
  void backward() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

namespace detail {

/// Builds an op result. The graph edge is recorded only when some input
/// requires grad, so frozen evaluation allocates no closures.
template <typename Scalar>
Tensor<Scalar> make_result(const Shape& shape, Buffer<Scalar> value,
                           std::vector<std::shared_ptr<Node<Scalar>>> inputs,
                           std::function<void(const Buffer<Scalar>&)> backward) {
  Tensor<Scalar> out(shape, std::move(value), false);
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  if (needs) {
    out.node()->requires_grad = true;
    out.node()->inputs = std::move(inputs);
    out.node()->backward = std::move(backward);
  }
  return out;
}

}  // namespace detail

template <typename Scalar>
void Tensor<Scalar>::backward() const {
  if (size() != 1)
    throw UsageError("backward() requires a scalar loss, got shape " + to_string(shape()));
  if (!requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  using NodeT = detail::Node<Scalar>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      NodeT* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(Buffer<Scalar>::Ones(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (!n->backward || n->grad.size() == 0) continue;
    n->backward(n->grad);
    n->grad.resize(0);  // interior gradients are not retained
  }
}

}  // namespace fforge
