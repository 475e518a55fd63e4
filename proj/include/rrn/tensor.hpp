#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rrn/errors.hpp"

namespace rrn::tg {

/// NCHW extents of a dense tensor.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) *
           static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  [[nodiscard]] std::size_t plane() const {
    return static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  }
  [[nodiscard]] std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense row-major NCHW array. Value semantics; the autodiff tape owns
/// copies of the tensors it records.
template <std::floating_point T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0)) : shape_(shape), data_(shape.numel(), fill) {
    check_dims(shape);
  }
  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    check_dims(shape);
    if (data_.size() != shape_.numel()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::span<T> data() { return data_; }
  [[nodiscard]] std::span<const T> data() const { return data_; }
  [[nodiscard]] const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  T& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  /// Contiguous view of one (n, c) plane.
  [[nodiscard]] std::span<T> plane(int n, int c) {
    return std::span<T>(data_).subspan(offset(n, c, 0, 0), shape_.plane());
  }
  [[nodiscard]] std::span<const T> plane(int n, int c) const {
    return std::span<const T>(data_).subspan(offset(n, c, 0, 0), shape_.plane());
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  template <std::floating_point U>
  [[nodiscard]] Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  /// The scalar held by a (1,1,1,1) tensor.
  [[nodiscard]] T item() const {
    if (data_.size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_.str());
    return data_[0];
  }

  /// Copy of channel `c` as a one-channel tensor.
  [[nodiscard]] Tensor channel(int c) const {
    Tensor out(Shape{shape_.n, 1, shape_.h, shape_.w});
    for (int n = 0; n < shape_.n; ++n) {
      auto src = plane(n, c);
      std::copy(src.begin(), src.end(), out.plane(n, 0).begin());
    }
    return out;
  }

  /// Copy of batch entry `n` as a batch-of-one tensor.
  [[nodiscard]] Tensor sample(int n) const {
    Shape s{1, shape_.c, shape_.h, shape_.w};
    auto first = data_.begin() + static_cast<std::ptrdiff_t>(offset(n, 0, 0, 0));
    return Tensor(s, std::vector<T>(first, first + static_cast<std::ptrdiff_t>(s.numel())));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static void check_dims(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw ShapeError("negative tensor dimension " + s.str());
    }
  }

  Shape shape_{};
  std::vector<T> data_;
};

/// Stacks batch-of-one tensors along the batch axis.
template <std::floating_point T>
Tensor<T> stack_batch(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ShapeError("stack_batch of zero tensors");
  Shape s = items.front().shape();
  std::vector<T> data;
  data.reserve(s.numel() * items.size());
  for (const auto& t : items) {
    const Shape& ts = t.shape();
    if (ts.n != 1 || ts.c != s.c || ts.h != s.h || ts.w != s.w) {
      throw ShapeError("stack_batch: " + ts.str() + " vs " + s.str());
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  s.n = static_cast<int>(items.size());
  return Tensor<T>(s, std::move(data));
}

}  // namespace rrn::tg
