// SPDX-License-Identifier: Apache-2.0
#include "dpl/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpl::inline DPL_PRECISION_NS {

AdamState AdamState::for_param(const Tensor& param, AdamOptions options) {
  AdamState s;
  s.m.assign(param.numel(), real(0));
  s.v.assign(param.numel(), real(0));
  s.options = options;
  return s;
}

void adam_step(Tensor& param, AdamState& state) {
  if (!param.has_grad()) throw std::invalid_argument("adam_step: parameter has no gradient");
  if (state.m.size() != param.numel() || state.v.size() != param.numel())
    throw std::invalid_argument("adam_step: optimizer state is not shaped like the parameter " +
                                shape_to_string(param.shape()));
  const auto g = param.grad();
  if (std::all_of(g.begin(), g.end(), [](real x) { return x == real(0); })) return;

  const auto& o = state.options;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  const real b1 = static_cast<real>(o.beta1), b2 = static_cast<real>(o.beta2);
  auto p = param.mutable_data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (real(1) - b1) * g[i];
    state.v[i] = b2 * state.v[i] + (real(1) - b2) * g[i] * g[i];
    const double m_hat = static_cast<double>(state.m[i]) / bc1;
    const double v_hat = static_cast<double>(state.v[i]) / bc2;
    p[i] -= static_cast<real>(o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon));
  }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options) : params_(std::move(params)) {
  states_.reserve(params_.size());
  for (const auto& p : params_) states_.push_back(AdamState::for_param(p, options));
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    // A parameter never touched by backward has no gradient buffer yet.
    if (!params_[i].has_grad()) continue;
    adam_step(params_[i], states_[i]);
  }
}

void Adam::zero_grad() { zero_grads(params_); }

}  // namespace dpl::inline DPL_PRECISION_NS
