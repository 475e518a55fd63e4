#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <deque>
#include <vector>

#include "rrn/tensor.hpp"

namespace rrn::tg {

using NodeId = std::size_t;

template <std::floating_point T>
class Tape;

/// Everything a backward rule sees. `grad_inputs[k]` is null when input k
/// does not need a gradient; rules accumulate (+=) into the others.
template <std::floating_point T>
struct BackwardArgs {
  std::span<const Tensor<T>* const> inputs;
  const Tensor<T>& output;
  const Tensor<T>& grad_output;
  std::span<Tensor<T>* const> grad_inputs;
};

template <std::floating_point T>
using BackwardFn = std::function<void(const BackwardArgs<T>&)>;

/// Handle to a value recorded on a tape.
template <std::floating_point T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, NodeId id) : tape_(tape), id_(id) {}

  [[nodiscard]] NodeId id() const { return id_; }
  [[nodiscard]] Tape<T>& tape() const { return *tape_; }
  [[nodiscard]] const Tensor<T>& value() const;
  [[nodiscard]] const Shape& shape() const { return value().shape(); }
  [[nodiscard]] bool requires_grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Gradients produced by one backward pass, indexed by node id.
template <std::floating_point T>
class Gradients {
 public:
  explicit Gradients(std::size_t n) : grads_(n) {}

  [[nodiscard]] bool has(NodeId id) const { return id < grads_.size() && grads_[id].has_value(); }
  /// Throws if `id` received no gradient (not a requires_grad ancestor of the loss).
  [[nodiscard]] const Tensor<T>& at(NodeId id) const;
  [[nodiscard]] const Tensor<T>& operator[](const Var<T>& v) const { return at(v.id()); }

  std::optional<Tensor<T>>& slot(NodeId id) { return grads_[id]; }

 private:
  std::vector<std::optional<Tensor<T>>> grads_;
};

/// Append-only record of a forward computation. Node ids are assigned in
/// creation order, so inputs always precede the nodes consuming them.
/// Single writer: one thread builds and consumes a tape.
template <std::floating_point T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false);
  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  /// Records an op output. The backward rule is kept only when some input
  /// requires a gradient. Throws NumericalError on non-finite output.
  Var<T> record(std::string op, Tensor<T> value, std::vector<NodeId> inputs, BackwardFn<T> fn);

  [[nodiscard]] const Tensor<T>& value(NodeId id) const { return nodes_.at(id).value; }
  [[nodiscard]] bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
  [[nodiscard]] const std::string& op_name(NodeId id) const { return nodes_.at(id).op; }
  [[nodiscard]] const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a scalar loss. The tape is not modified, so repeated
  /// calls give bit-identical results.
  [[nodiscard]] Gradients<T> backward(const Var<T>& loss) const;

 private:
  struct Node {
    std::string op;
    Tensor<T> value;
    std::vector<NodeId> inputs;
    BackwardFn<T> fn;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;  // stable references across appends
};

template <std::floating_point T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

template <std::floating_point T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

extern template class Tape<float>;
extern template class Tape<double>;
extern template class Gradients<float>;
extern template class Gradients<double>;

}  // namespace rrn::tg
