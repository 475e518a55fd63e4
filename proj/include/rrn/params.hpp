#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "rrn/tape.hpp"

namespace rrn {

/// Shape of one convolution block: `<name>.weight` [out, in, k, k] and
/// `<name>.bias` [out].
struct ConvSpec {
  std::string name;
  int in = 0;
  int out = 0;
  int k = 1;

  [[nodiscard]] std::size_t fan_in() const { return static_cast<std::size_t>(in) * k * k; }
  [[nodiscard]] std::size_t scalars() const { return fan_in() * out + out; }
};

/// Named parameter tensors, iterated in lexicographic name order so that
/// serialisation and optimiser updates are order-stable.
template <std::floating_point T>
class ParamStore {
 public:
  using Map = std::map<std::string, tg::Tensor<T>>;

  void set(const std::string& name, tg::Tensor<T> value) { tensors_[name] = std::move(value); }
  [[nodiscard]] bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  [[nodiscard]] const tg::Tensor<T>& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw Error("missing parameter '" + name + "'");
    return it->second;
  }
  tg::Tensor<T>& at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw Error("missing parameter '" + name + "'");
    return it->second;
  }
  [[nodiscard]] std::size_t size() const { return tensors_.size(); }
  [[nodiscard]] std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
  }

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  Map tensors_;
};

/// Parameters placed on a tape as leaves.
template <std::floating_point T>
class BoundParams {
 public:
  BoundParams(tg::Tape<T>& tape, const ParamStore<T>& store, bool requires_grad) {
    for (const auto& [name, value] : store) vars_.emplace(name, tape.leaf(value, requires_grad));
  }

  /// Wraps variables that already live on a tape.
  static BoundParams from_vars(std::map<std::string, tg::Var<T>> vars) {
    BoundParams p;
    p.vars_ = std::move(vars);
    return p;
  }

  [[nodiscard]] const tg::Var<T>& operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw Error("parameter '" + name + "' is not bound");
    return it->second;
  }
  [[nodiscard]] const tg::Var<T>& weight(const std::string& block) const { return (*this)[block + ".weight"]; }
  [[nodiscard]] const tg::Var<T>& bias(const std::string& block) const { return (*this)[block + ".bias"]; }

  /// Gradient tensors keyed by parameter name.
  [[nodiscard]] std::map<std::string, tg::Tensor<T>> collect(const tg::Gradients<T>& grads) const {
    std::map<std::string, tg::Tensor<T>> out;
    for (const auto& [name, var] : vars_) {
      out.emplace(name, grads.has(var.id()) ? grads.at(var.id()) : tg::Tensor<T>(var.shape()));
    }
    return out;
  }

  auto begin() const { return vars_.begin(); }
  auto end() const { return vars_.end(); }

 private:
  BoundParams() = default;

  std::map<std::string, tg::Var<T>> vars_;
};

}  // namespace rrn
