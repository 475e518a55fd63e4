#pragma once

#include <span>
#include <vector>

#include "rrn/tape.hpp"
#include "rrn/tensor.hpp"

namespace rrn::tg {

// Forward/backward kernels on plain tensors. Pure functions, safe to call
// concurrently. The differentiable ops further down are thin tape wrappers.
namespace kernel {

/// Zero-padded convolution, padding k/2. Weight is [outC, inC, k, k] with
/// k in {1, 3}; stride 2 is accepted for k = 3 only.
template <std::floating_point T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride = 1);

/// Accumulates input/weight/bias gradients; any output pointer may be null.
template <std::floating_point T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out, int stride,
                     Tensor<T>* grad_x, Tensor<T>* grad_w, Tensor<T>* grad_b);

/// Bilinear resampling with half-pixel centres and edge clamping:
/// source coordinate = (i + 0.5) * in / out - 0.5, clamped to [0, in - 1].
template <std::floating_point T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);

template <std::floating_point T>
void resize_bilinear_backward(const Tensor<T>& grad_out, Tensor<T>& grad_x);

/// Bin i covers [floor(i*H/bins), ceil((i+1)*H/bins)).
template <std::floating_point T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, int bins_h, int bins_w);

template <std::floating_point T>
void adaptive_avg_pool_backward(const Tensor<T>& grad_out, Tensor<T>& grad_x);

template <std::floating_point T>
Tensor<T> relu(const Tensor<T>& x);

template <std::floating_point T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// a + b / a * b where b either matches a or has one channel (broadcast).
template <std::floating_point T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts);

}  // namespace kernel

template <std::floating_point T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride = 1);

template <std::floating_point T>
Var<T> relu(const Var<T>& x);

template <std::floating_point T>
Var<T> sigmoid(const Var<T>& x);

template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b);

template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b);

/// s * x for a fixed scalar s.
template <std::floating_point T>
Var<T> scale(const Var<T>& x, T s);

/// Sum of all elements as a (1,1,1,1) tensor.
template <std::floating_point T>
Var<T> sum(const Var<T>& x);

template <std::floating_point T>
Var<T> mean(const Var<T>& x);

template <std::floating_point T>
Var<T> resize_bilinear(const Var<T>& x, int out_h, int out_w);

template <std::floating_point T>
Var<T> upsample_x2(const Var<T>& x) {
  return resize_bilinear(x, 2 * x.shape().h, 2 * x.shape().w);
}

template <std::floating_point T>
Var<T> adaptive_avg_pool(const Var<T>& x, int bins_h, int bins_w);

template <std::floating_point T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

}  // namespace rrn::tg
