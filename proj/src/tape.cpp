#include "rrn/tape.hpp"

#include <utility>

namespace rrn::tg {

template <std::floating_point T>
const Tensor<T>& Gradients<T>::at(NodeId id) const {
  if (!has(id)) {
    throw Error("no gradient recorded for node " + std::to_string(id) +
                " (detached from the loss or not requiring grad)");
  }
  return *grads_[id];
}

template <std::floating_point T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  if (!value.all_finite()) throw NumericalError("non-finite value in tape leaf");
  nodes_.push_back(Node{"leaf", std::move(value), {}, {}, requires_grad});
  return Var<T>(this, nodes_.size() - 1);
}

template <std::floating_point T>
Var<T> Tape<T>::record(std::string op, Tensor<T> value, std::vector<NodeId> inputs,
                       BackwardFn<T> fn) {
  if (!value.all_finite()) throw NumericalError("non-finite output from op '" + op + "'");
  bool needs = false;
  for (NodeId in : inputs) {
    if (in >= nodes_.size()) throw Error("op '" + op + "' references an unknown node");
    needs = needs || nodes_[in].requires_grad;
  }
  if (!needs) fn = nullptr;
  nodes_.push_back(Node{std::move(op), std::move(value), std::move(inputs), std::move(fn), needs});
  return Var<T>(this, nodes_.size() - 1);
}

template <std::floating_point T>
Gradients<T> Tape<T>::backward(const Var<T>& loss) const {
  if (&loss.tape() != this) throw Error("backward: loss belongs to a different tape");
  const NodeId root = loss.id();
  if (nodes_.at(root).value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + nodes_[root].value.shape().str());
  }
  if (!nodes_[root].requires_grad) {
    throw Error("backward: loss does not depend on any parameter requiring grad");
  }

  Gradients<T> grads(nodes_.size());
  grads.slot(root) = Tensor<T>(nodes_[root].value.shape(), T(1));

  std::vector<const Tensor<T>*> in_values;
  std::vector<Tensor<T>*> in_grads;
  for (NodeId id = root + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    auto& g = grads.slot(id);
    if (!g || !node.fn) continue;
    in_values.clear();
    in_grads.clear();
    for (NodeId in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      if (nodes_[in].requires_grad) {
        auto& slot = grads.slot(in);
        if (!slot) slot = Tensor<T>(nodes_[in].value.shape());
        in_grads.push_back(&*slot);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    node.fn(BackwardArgs<T>{in_values, node.value, *g, in_grads});
  }
  return grads;
}

template class Tape<float>;
template class Tape<double>;
template class Gradients<float>;
template class Gradients<double>;

}  // namespace rrn::tg
