#include "rrn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vecmath.hpp"

namespace rrn::tg {
namespace {

struct ConvGeometry {
  int k = 0;
  int pad = 0;
  int stride = 1;
  int out_h = 0;
  int out_w = 0;
  std::size_t patch = 0;   // inC * k * k
  std::size_t pixels = 0;  // out_h * out_w
};

template <class T>
ConvGeometry conv_geometry(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, int stride) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (ws.h != ws.w || (ws.h != 1 && ws.h != 3)) {
    throw ShapeError("conv2d: kernel must be 1x1 or 3x3, weight " + ws.str());
  }
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: input " + xs.str() + " has " + std::to_string(xs.c) +
                     " channels but weight " + ws.str() + " expects " + std::to_string(ws.c));
  }
  if (b != nullptr && b->size() != static_cast<std::size_t>(ws.n)) {
    throw ShapeError("conv2d: bias " + b->shape().str() + " does not match weight " + ws.str());
  }
  if (stride != 1 && !(stride == 2 && ws.h == 3)) {
    throw ShapeError("conv2d: stride " + std::to_string(stride) + " unsupported for " +
                     std::to_string(ws.h) + "x" + std::to_string(ws.w) + " kernels");
  }
  ConvGeometry g;
  g.k = ws.h;
  g.pad = g.k / 2;
  g.stride = stride;
  g.out_h = (xs.h + 2 * g.pad - g.k) / stride + 1;
  g.out_w = (xs.w + 2 * g.pad - g.k) / stride + 1;
  g.patch = static_cast<std::size_t>(xs.c) * g.k * g.k;
  g.pixels = static_cast<std::size_t>(g.out_h) * g.out_w;
  return g;
}

bool direct(const ConvGeometry& g) { return g.k == 1 && g.stride == 1; }

template <class T>
void im2col(const Tensor<T>& x, int n, const ConvGeometry& g, std::vector<T>& col) {
  const Shape& xs = x.shape();
  col.assign(g.patch * g.pixels, T(0));
  std::size_t row = 0;
  for (int c = 0; c < xs.c; ++c) {
    const T* src = x.plane(n, c).data();
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx, ++row) {
        T* dst = col.data() + row * g.pixels;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= xs.h) continue;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < xs.w) dst[oy * g.out_w + ox] = src[iy * xs.w + ix];
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const std::vector<T>& col, const ConvGeometry& g, int n, Tensor<T>& gx) {
  const Shape& xs = gx.shape();
  std::size_t row = 0;
  for (int c = 0; c < xs.c; ++c) {
    T* dst = gx.plane(n, c).data();
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx, ++row) {
        const T* src = col.data() + row * g.pixels;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= xs.h) continue;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix >= 0 && ix < xs.w) dst[iy * xs.w + ix] += src[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

struct Taps {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> frac;
};

Taps bilinear_taps(int in, int out) {
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double ratio = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    double src = (i + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    t.lo[i] = lo;
    t.hi[i] = std::min(lo + 1, in - 1);
    t.frac[i] = src - lo;
  }
  return t;
}

std::pair<int, int> pool_range(int i, int in, int bins) {
  const int start = (i * in) / bins;
  const int end = ((i + 1) * in + bins - 1) / bins;
  return {start, end};
}

template <class T>
void check_binary(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as == bs) return;
  if (bs.c == 1 && bs.n == as.n && bs.h == as.h && bs.w == as.w) return;
  throw ShapeError(std::string(op) + ": incompatible shapes " + as.str() + " and " + bs.str());
}

template <class T>
T sigmoid_scalar(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

}  // namespace

namespace kernel {

template <std::floating_point T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride) {
  const ConvGeometry g = conv_geometry(x, w, &b, stride);
  const Shape& xs = x.shape();
  const int out_c = w.shape().n;
  Tensor<T> out(Shape{xs.n, out_c, g.out_h, g.out_w});
  std::vector<T> col;
  for (int n = 0; n < xs.n; ++n) {
    const T* cols = nullptr;
    if (direct(g)) {
      cols = x.plane(n, 0).data();
    } else {
      im2col(x, n, g, col);
      cols = col.data();
    }
    for (int oc = 0; oc < out_c; ++oc) {
      T* dst = out.plane(n, oc).data();
      std::fill(dst, dst + g.pixels, b[oc]);
      const T* wrow = w.data().data() + static_cast<std::size_t>(oc) * g.patch;
      for (std::size_t kk = 0; kk < g.patch; ++kk) {
        detail::axpy(dst, cols + kk * g.pixels, wrow[kk], g.pixels);
      }
    }
  }
  return out;
}

template <std::floating_point T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& grad_out, int stride,
                     Tensor<T>* grad_x, Tensor<T>* grad_w, Tensor<T>* grad_b) {
  const ConvGeometry g = conv_geometry<T>(x, w, nullptr, stride);
  const Shape& xs = x.shape();
  const int out_c = w.shape().n;
  std::vector<T> col;
  std::vector<T> dcol;
  for (int n = 0; n < xs.n; ++n) {
    if (grad_b != nullptr) {
      for (int oc = 0; oc < out_c; ++oc) {
        (*grad_b)[oc] += detail::sum(grad_out.plane(n, oc).data(), g.pixels);
      }
    }
    if (grad_w != nullptr) {
      const T* cols = nullptr;
      if (direct(g)) {
        cols = x.plane(n, 0).data();
      } else {
        im2col(x, n, g, col);
        cols = col.data();
      }
      for (int oc = 0; oc < out_c; ++oc) {
        const T* go = grad_out.plane(n, oc).data();
        T* gw = grad_w->data().data() + static_cast<std::size_t>(oc) * g.patch;
        for (std::size_t kk = 0; kk < g.patch; ++kk) {
          gw[kk] += detail::dot(go, cols + kk * g.pixels, g.pixels);
        }
      }
    }
    if (grad_x != nullptr) {
      T* target = nullptr;
      if (direct(g)) {
        target = grad_x->plane(n, 0).data();
      } else {
        dcol.assign(g.patch * g.pixels, T(0));
        target = dcol.data();
      }
      for (int oc = 0; oc < out_c; ++oc) {
        const T* go = grad_out.plane(n, oc).data();
        const T* wrow = w.data().data() + static_cast<std::size_t>(oc) * g.patch;
        for (std::size_t kk = 0; kk < g.patch; ++kk) {
          detail::axpy(target + kk * g.pixels, go, wrow[kk], g.pixels);
        }
      }
      if (!direct(g)) col2im_add(dcol, g, n, *grad_x);
    }
  }
}

template <std::floating_point T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
  const Shape& s = x.shape();
  if (s.h < 1 || s.w < 1 || out_h < 1 || out_w < 1) {
    throw ShapeError("resize_bilinear: empty extent " + s.str() + " -> " + std::to_string(out_h) +
                     "x" + std::to_string(out_w));
  }
  const Taps ty = bilinear_taps(s.h, out_h);
  const Taps tx = bilinear_taps(s.w, out_w);
  Tensor<T> out(Shape{s.n, s.c, out_h, out_w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = x.plane(n, c).data();
      T* dst = out.plane(n, c).data();
      for (int oy = 0; oy < out_h; ++oy) {
        const T fy = static_cast<T>(ty.frac[oy]);
        const T* r0 = src + static_cast<std::size_t>(ty.lo[oy]) * s.w;
        const T* r1 = src + static_cast<std::size_t>(ty.hi[oy]) * s.w;
        for (int ox = 0; ox < out_w; ++ox) {
          const T fx = static_cast<T>(tx.frac[ox]);
          const int x0 = tx.lo[ox];
          const int x1 = tx.hi[ox];
          const T top = r0[x0] + fx * (r0[x1] - r0[x0]);
          const T bot = r1[x0] + fx * (r1[x1] - r1[x0]);
          dst[oy * out_w + ox] = top + fy * (bot - top);
        }
      }
    }
  }
  return out;
}

template <std::floating_point T>
void resize_bilinear_backward(const Tensor<T>& grad_out, Tensor<T>& grad_x) {
  const Shape& s = grad_x.shape();
  const Shape& os = grad_out.shape();
  const Taps ty = bilinear_taps(s.h, os.h);
  const Taps tx = bilinear_taps(s.w, os.w);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* go = grad_out.plane(n, c).data();
      T* gx = grad_x.plane(n, c).data();
      for (int oy = 0; oy < os.h; ++oy) {
        const T fy = static_cast<T>(ty.frac[oy]);
        T* r0 = gx + static_cast<std::size_t>(ty.lo[oy]) * s.w;
        T* r1 = gx + static_cast<std::size_t>(ty.hi[oy]) * s.w;
        for (int ox = 0; ox < os.w; ++ox) {
          const T fx = static_cast<T>(tx.frac[ox]);
          const T g = go[oy * os.w + ox];
          const T gtop = g * (T(1) - fy);
          const T gbot = g * fy;
          r0[tx.lo[ox]] += gtop * (T(1) - fx);
          r0[tx.hi[ox]] += gtop * fx;
          r1[tx.lo[ox]] += gbot * (T(1) - fx);
          r1[tx.hi[ox]] += gbot * fx;
        }
      }
    }
  }
}

template <std::floating_point T>
Tensor<T> adaptive_avg_pool(const Tensor<T>& x, int bins_h, int bins_w) {
  const Shape& s = x.shape();
  if (bins_h < 1 || bins_w < 1 || bins_h > s.h || bins_w > s.w) {
    throw ShapeError("adaptive_avg_pool: bins " + std::to_string(bins_h) + "x" +
                     std::to_string(bins_w) + " invalid for input " + s.str());
  }
  Tensor<T> out(Shape{s.n, s.c, bins_h, bins_w});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const T* src = x.plane(n, c).data();
      for (int by = 0; by < bins_h; ++by) {
        const auto [y0, y1] = pool_range(by, s.h, bins_h);
        for (int bx = 0; bx < bins_w; ++bx) {
          const auto [x0, x1] = pool_range(bx, s.w, bins_w);
          T acc = 0;
          for (int y = y0; y < y1; ++y) {
            for (int xx = x0; xx < x1; ++xx) acc += src[y * s.w + xx];
          }
          out.at(n, c, by, bx) = acc / static_cast<T>((y1 - y0) * (x1 - x0));
        }
      }
    }
  }
  return out;
}

template <std::floating_point T>
void adaptive_avg_pool_backward(const Tensor<T>& grad_out, Tensor<T>& grad_x) {
  const Shape& s = grad_x.shape();
  const Shape& os = grad_out.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      T* gx = grad_x.plane(n, c).data();
      for (int by = 0; by < os.h; ++by) {
        const auto [y0, y1] = pool_range(by, s.h, os.h);
        for (int bx = 0; bx < os.w; ++bx) {
          const auto [x0, x1] = pool_range(bx, s.w, os.w);
          const T g = grad_out.at(n, c, by, bx) / static_cast<T>((y1 - y0) * (x1 - x0));
          for (int y = y0; y < y1; ++y) {
            for (int xx = x0; xx < x1; ++xx) gx[y * s.w + xx] += g;
          }
        }
      }
    }
  }
}

template <std::floating_point T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return out;
}

template <std::floating_point T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid_scalar(x[i]);
  return out;
}

template <std::floating_point T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_binary(a, b, "add");
  Tensor<T> out(a.shape());
  const Shape& s = a.shape();
  const bool bcast = b.shape().c != s.c;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      auto pa = a.plane(n, c);
      auto pb = b.plane(n, bcast ? 0 : c);
      auto po = out.plane(n, c);
      for (std::size_t i = 0; i < pa.size(); ++i) po[i] = pa[i] + pb[i];
    }
  }
  return out;
}

template <std::floating_point T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_binary(a, b, "mul");
  Tensor<T> out(a.shape());
  const Shape& s = a.shape();
  const bool bcast = b.shape().c != s.c;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      auto pa = a.plane(n, c);
      auto pb = b.plane(n, bcast ? 0 : c);
      auto po = out.plane(n, c);
      for (std::size_t i = 0; i < pa.size(); ++i) po[i] = pa[i] * pb[i];
    }
  }
  return out;
}

template <std::floating_point T>
Tensor<T> concat_channels(std::span<const Tensor<T>* const> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no parts");
  Shape s = parts.front()->shape();
  int channels = 0;
  for (const Tensor<T>* p : parts) {
    const Shape& ps = p->shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w) {
      throw ShapeError("concat_channels: " + ps.str() + " does not match " + s.str());
    }
    channels += ps.c;
  }
  s.c = channels;
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (const Tensor<T>* p : parts) {
      for (int c = 0; c < p->shape().c; ++c) {
        auto src = p->plane(n, c);
        std::copy(src.begin(), src.end(), out.plane(n, c0 + c).begin());
      }
      c0 += p->shape().c;
    }
  }
  return out;
}

}  // namespace kernel

template <std::floating_point T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int stride) {
  Tensor<T> out = kernel::conv2d(x.value(), w.value(), b.value(), stride);
  const std::string name = "conv" + std::to_string(w.shape().h) + "x" + std::to_string(w.shape().w);
  return x.tape().record(name, std::move(out), {x.id(), w.id(), b.id()},
                         [stride](const BackwardArgs<T>& a) {
                           kernel::conv2d_backward(*a.inputs[0], *a.inputs[1], a.grad_output,
                                                   stride, a.grad_inputs[0], a.grad_inputs[1],
                                                   a.grad_inputs[2]);
                         });
}

template <std::floating_point T>
Var<T> relu(const Var<T>& x) {
  return x.tape().record("relu", kernel::relu(x.value()), {x.id()}, [](const BackwardArgs<T>& a) {
    const Tensor<T>& in = *a.inputs[0];
    Tensor<T>& g = *a.grad_inputs[0];
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > T(0)) g[i] += a.grad_output[i];
    }
  });
}

template <std::floating_point T>
Var<T> sigmoid(const Var<T>& x) {
  return x.tape().record("sigmoid", kernel::sigmoid(x.value()), {x.id()},
                         [](const BackwardArgs<T>& a) {
                           const Tensor<T>& y = a.output;
                           Tensor<T>& g = *a.grad_inputs[0];
                           for (std::size_t i = 0; i < y.size(); ++i) {
                             g[i] += a.grad_output[i] * y[i] * (T(1) - y[i]);
                           }
                         });
}

template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return a.tape().record("add", kernel::add(a.value(), b.value()), {a.id(), b.id()},
                         [](const BackwardArgs<T>& args) {
                           const Tensor<T>& go = args.grad_output;
                           if (Tensor<T>* ga = args.grad_inputs[0]) {
                             for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i];
                           }
                           if (Tensor<T>* gb = args.grad_inputs[1]) {
                             const Shape& s = go.shape();
                             const bool bcast = gb->shape().c != s.c;
                             for (int n = 0; n < s.n; ++n) {
                               for (int c = 0; c < s.c; ++c) {
                                 auto src = go.plane(n, c);
                                 auto dst = gb->plane(n, bcast ? 0 : c);
                                 for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
                               }
                             }
                           }
                         });
}

template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return a.tape().record(
      "mul", kernel::mul(a.value(), b.value()), {a.id(), b.id()}, [](const BackwardArgs<T>& args) {
        const Tensor<T>& go = args.grad_output;
        const Tensor<T>& va = *args.inputs[0];
        const Tensor<T>& vb = *args.inputs[1];
        const Shape& s = go.shape();
        const bool bcast = vb.shape().c != s.c;
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            const int cb = bcast ? 0 : c;
            auto g = go.plane(n, c);
            auto pa = va.plane(n, c);
            auto pb = vb.plane(n, cb);
            if (Tensor<T>* ga = args.grad_inputs[0]) {
              auto dst = ga->plane(n, c);
              for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * pb[i];
            }
            if (Tensor<T>* gb = args.grad_inputs[1]) {
              auto dst = gb->plane(n, cb);
              for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * pa[i];
            }
          }
        }
      });
}

template <std::floating_point T>
Var<T> scale(const Var<T>& x, T s) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v *= s;
  return x.tape().record("scale", std::move(out), {x.id()}, [s](const BackwardArgs<T>& a) {
    Tensor<T>& g = *a.grad_inputs[0];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * a.grad_output[i];
  });
}

template <std::floating_point T>
Var<T> sum(const Var<T>& x) {
  const auto& v = x.value();
  Tensor<T> out(Shape{1, 1, 1, 1}, detail::sum(v.data().data(), v.size()));
  return x.tape().record("sum", std::move(out), {x.id()}, [](const BackwardArgs<T>& a) {
    const T g0 = a.grad_output[0];
    for (auto& g : a.grad_inputs[0]->data()) g += g0;
  });
}

template <std::floating_point T>
Var<T> mean(const Var<T>& x) {
  const auto n = static_cast<T>(x.value().size());
  return scale(sum(x), T(1) / n);
}

template <std::floating_point T>
Var<T> resize_bilinear(const Var<T>& x, int out_h, int out_w) {
  return x.tape().record("resize_bilinear", kernel::resize_bilinear(x.value(), out_h, out_w),
                         {x.id()}, [](const BackwardArgs<T>& a) {
                           kernel::resize_bilinear_backward(a.grad_output, *a.grad_inputs[0]);
                         });
}

template <std::floating_point T>
Var<T> adaptive_avg_pool(const Var<T>& x, int bins_h, int bins_w) {
  return x.tape().record("adaptive_avg_pool", kernel::adaptive_avg_pool(x.value(), bins_h, bins_w),
                         {x.id()}, [](const BackwardArgs<T>& a) {
                           kernel::adaptive_avg_pool_backward(a.grad_output, *a.grad_inputs[0]);
                         });
}

template <std::floating_point T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no parts");
  std::vector<const Tensor<T>*> values;
  std::vector<NodeId> ids;
  for (const auto& p : parts) {
    values.push_back(&p.value());
    ids.push_back(p.id());
  }
  Tensor<T> out = kernel::concat_channels<T>(values);
  return parts.front().tape().record(
      "concat_channels", std::move(out), std::move(ids), [](const BackwardArgs<T>& a) {
        const Shape& s = a.grad_output.shape();
        int c0 = 0;
        for (std::size_t k = 0; k < a.inputs.size(); ++k) {
          const int pc = a.inputs[k]->shape().c;
          if (Tensor<T>* g = a.grad_inputs[k]) {
            for (int n = 0; n < s.n; ++n) {
              for (int c = 0; c < pc; ++c) {
                auto src = a.grad_output.plane(n, c0 + c);
                auto dst = g->plane(n, c);
                for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
              }
            }
          }
          c0 += pc;
        }
      });
}

#define RRN_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> kernel::conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int); \
  template void kernel::conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                        int, Tensor<T>*, Tensor<T>*, Tensor<T>*);               \
  template Tensor<T> kernel::resize_bilinear(const Tensor<T>&, int, int);                       \
  template void kernel::resize_bilinear_backward(const Tensor<T>&, Tensor<T>&);                 \
  template Tensor<T> kernel::adaptive_avg_pool(const Tensor<T>&, int, int);                     \
  template void kernel::adaptive_avg_pool_backward(const Tensor<T>&, Tensor<T>&);               \
  template Tensor<T> kernel::relu(const Tensor<T>&);                                            \
  template Tensor<T> kernel::sigmoid(const Tensor<T>&);                                         \
  template Tensor<T> kernel::add(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> kernel::mul(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> kernel::concat_channels(std::span<const Tensor<T>* const>);                \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int);                     \
  template Var<T> relu(const Var<T>&);                                                          \
  template Var<T> sigmoid(const Var<T>&);                                                       \
  template Var<T> add(const Var<T>&, const Var<T>&);                                            \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                            \
  template Var<T> scale(const Var<T>&, T);                                                      \
  template Var<T> sum(const Var<T>&);                                                           \
  template Var<T> mean(const Var<T>&);                                                          \
  template Var<T> resize_bilinear(const Var<T>&, int, int);                                     \
  template Var<T> adaptive_avg_pool(const Var<T>&, int, int);                                   \
  template Var<T> concat_channels(const std::vector<Var<T>>&);

RRN_INSTANTIATE_OPS(float)
RRN_INSTANTIATE_OPS(double)

#undef RRN_INSTANTIATE_OPS

}  // namespace rrn::tg
