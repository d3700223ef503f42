#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fforge/tensor.hpp"

namespace fforge {

/// A named tensor inside a ParameterSet. `extents` is the logical shape that
/// gets serialized (e.g. a bias is rank 1 even though its Tensor is 1×1×1×C).
template <typename Scalar>
struct Parameter {
  std::string name;
  std::vector<Index> extents;
  Tensor<Scalar> value;
  bool trainable = true;  // false for batchnorm running statistics
};

/// Named parameter collection. Names are unique; insertion order is the
/// serialization and optimizer order.
template <typename Scalar>
class ParameterSet {
 public:
  explicit ParameterSet(std::string prefix = "") : prefix_(std::move(prefix)) {}

  const std::string& prefix() const { return prefix_; }

  /// Registers a tensor under prefix + name and returns the shared handle.
  Tensor<Scalar> add(const std::string& name, std::vector<Index> extents, Buffer<Scalar> values,
                     bool trainable = true) {
    const std::string full = prefix_ + name;
    if (index_.count(full)) throw ConfigError("duplicate parameter name '" + full + "'");
    Shape shape{1, 1, 1, 1};
    if (extents.empty() || extents.size() > 4)
      throw ConfigError("parameter '" + full + "' must have rank 1..4");
    std::copy(extents.begin(), extents.end(), shape.begin() + (4 - extents.size()));
    Tensor<Scalar> t(shape, std::move(values), trainable);
    index_[full] = entries_.size();
    entries_.push_back({full, std::move(extents), t, trainable});
    return t;
  }

  const std::vector<Parameter<Scalar>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const Parameter<Scalar>& at(const std::string& full_name) const {
    auto it = index_.find(full_name);
    if (it == index_.end()) throw UsageError("no parameter named '" + full_name + "'");
    return entries_[it->second];
  }
  bool contains(const std::string& full_name) const { return index_.count(full_name) != 0; }

  /// Number of trainable scalars.
  Index trainable_count() const {
    Index n = 0;
    for (const auto& p : entries_)
      if (p.trainable) n += p.value.size();
    return n;
  }

  void zero_grad() const {
    for (const auto& p : entries_) p.value.zero_grad();
  }

 private:
  std::string prefix_;
  std::vector<Parameter<Scalar>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Deterministic initializer shared by the network builders.
///
/// Weights use Kaiming-normal fan-in scaling, biases zero, batchnorm
/// gamma = 1 and beta = 0, running mean 0 and running variance 1.
template <typename Scalar>
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Buffer<Scalar> kaiming(Index count, Index fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(std::max<Index>(fan_in, 1))));
    Buffer<Scalar> b(count);
    for (Index i = 0; i < count; ++i) b[i] = static_cast<Scalar>(dist(rng_));
    return b;
  }

  static Buffer<Scalar> zeros(Index count) { return Buffer<Scalar>::Zero(count); }
  static Buffer<Scalar> ones(Index count) { return Buffer<Scalar>::Ones(count); }

 private:
  std::mt19937_64 rng_;
};

/// Adam moments for one ParameterSet, aligned with its entry order.
template <typename Scalar>
struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Buffer<Scalar>> first_moment;
  std::vector<Buffer<Scalar>> second_moment;
};

/// One bias-corrected Adam update over the trainable entries of `params`,
/// then clears their gradients. Entries without a gradient see g = 0.
template <typename Scalar>
void adam_step(const ParameterSet<Scalar>& params, AdamState<Scalar>& state) {
  const auto& entries = params.entries();
  if (state.first_moment.size() != entries.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : entries) {
      state.first_moment.push_back(Buffer<Scalar>::Zero(p.value.size()));
      state.second_moment.push_back(Buffer<Scalar>::Zero(p.value.size()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, double(state.step));
  const Scalar b1 = Scalar(state.beta1), b2 = Scalar(state.beta2);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& p = entries[k];
    if (!p.trainable) continue;
    if (p.value.has_grad()) {
      const Buffer<Scalar> g = p.value.grad();
      state.first_moment[k] = b1 * state.first_moment[k] + (1 - b1) * g;
      state.second_moment[k] = b2 * state.second_moment[k] + (1 - b2) * g.square();
    } else {
      state.first_moment[k] *= b1;
      state.second_moment[k] *= b2;
    }
    const Buffer<Scalar> m_hat = state.first_moment[k] / Scalar(c1);
    const Buffer<Scalar> v_hat = state.second_moment[k] / Scalar(c2);
    p.value.mutable_value() -=
        Scalar(state.learning_rate) * m_hat / (v_hat.sqrt() + Scalar(state.epsilon));
    p.value.zero_grad();
  }
}

}  // namespace fforge
