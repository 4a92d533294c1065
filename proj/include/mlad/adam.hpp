#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mlad/tensor.hpp"

namespace mlad {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment accumulators, one per parameter tensor.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  AdamState() = default;

  explicit AdamState(std::span<const Tensor> params) {
    for (const Tensor& p : params) {
      m.emplace_back(p.shape(), 0.0);
      v.emplace_back(p.shape(), 0.0);
    }
  }
};

/// One bias-corrected Adam update, in place.
inline void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state,
                      const AdamOptions& opt) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error("dimension_mismatch", "adam_step: parameter/gradient/state count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].shape() != grads[i].shape() || params[i].shape() != state.m[i].shape())
      throw Error("dimension_mismatch", "adam_step: shape mismatch at parameter " + std::to_string(i));

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = opt.beta1 * m[j] + (1.0 - opt.beta1) * g[j];
      v[j] = opt.beta2 * v[j] + (1.0 - opt.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= opt.lr * mhat / (std::sqrt(vhat) + opt.epsilon);
    }
  }
}

}  // namespace mlad
