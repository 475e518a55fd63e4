#include <cmath>

#include "rrn/trainer.hpp"

namespace rrn::train {

double poly_lr(double base, long iter, long max_iter, double power) {
  if (max_iter < 1) throw ConfigError("poly_lr: max_iter must be >= 1");
  if (iter < 0 || iter > max_iter) {
    throw ConfigError("poly_lr: iter " + std::to_string(iter) + " outside [0, " + std::to_string(max_iter) + "]");
  }
  return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

long max_iterations(int epochs, std::size_t train_size, int batch) {
  if (epochs < 1 || batch < 1 || train_size == 0) throw ConfigError("max_iterations: empty schedule");
  const auto per_epoch = static_cast<long>((train_size + static_cast<std::size_t>(batch) - 1) / batch);
  return epochs * per_epoch;
}

template <std::floating_point T>
OptState<T> OptState<T>::zeros_like(const ParamStore<T>& params) {
  OptState s;
  for (const auto& [name, p] : params) s.velocity.emplace(name, tg::Tensor<T>(p.shape()));
  return s;
}

template <std::floating_point T>
void sgd_step(ParamStore<T>& params, const std::map<std::string, tg::Tensor<T>>& grads, OptState<T>& state,
              double lr, double momentum, double weight_decay) {
  if (grads.size() != params.size() || state.velocity.size() != params.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) + " params, " + std::to_string(grads.size()) +
                     " grads, " + std::to_string(state.velocity.size()) + " velocity buffers");
  }
  const T m = static_cast<T>(momentum);
  const T wd = static_cast<T>(weight_decay);
  const T a = static_cast<T>(lr);
  for (auto& [name, p] : params) {
    auto g = grads.find(name);
    auto v = state.velocity.find(name);
    if (g == grads.end() || v == state.velocity.end()) throw ShapeError("sgd_step: no gradient for '" + name + "'");
    if (!(g->second.shape() == p.shape()) || !(v->second.shape() == p.shape())) {
      throw ShapeError("sgd_step: '" + name + "' param " + p.shape().str() + ", grad " + g->second.shape().str() +
                       ", velocity " + v->second.shape().str());
    }
    auto pd = p.data();
    auto gd = g->second.data();
    auto vd = v->second.data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      vd[i] = m * vd[i] + gd[i] + wd * pd[i];
      pd[i] -= a * vd[i];
    }
  }
  ++state.step;
}

template struct OptState<float>;
template struct OptState<double>;
template void sgd_step<float>(ParamStore<float>&, const std::map<std::string, tg::Tensor<float>>&,
                              OptState<float>&, double, double, double);
template void sgd_step<double>(ParamStore<double>&, const std::map<std::string, tg::Tensor<double>>&,
                               OptState<double>&, double, double, double);

Stat aggregate(std::span<const double> values) {
  if (values.empty()) throw ConfigError("aggregate of zero values");
  double mean = 0.0;
  for (double v : values) mean += v;
  const auto n = static_cast<double>(values.size());
  mean /= n;
  double resid = 0.0;
  for (double v : values) resid += v - mean;
  mean += resid / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  return {mean, std::sqrt(var)};
}

}  // namespace rrn::train
