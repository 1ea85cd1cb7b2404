// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dpl/tensor.hpp"

namespace dpl::inline DPL_PRECISION_NS {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers for one parameter.
struct AdamState {
  std::vector<real> m;
  std::vector<real> v;
  std::uint64_t t = 0;
  AdamOptions options;

  static AdamState for_param(const Tensor& param, AdamOptions options = {});
};

/// Bias-corrected Adam update in place. The gradient is left untouched. A
/// gradient that is zero everywhere is treated as "no update": moments, step
/// count and parameter all stay as they are.
void adam_step(Tensor& param, AdamState& state);

/// Adam over a fixed parameter list, one AdamState each.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor> params, AdamOptions options);

  void step();
  void zero_grad();

  std::span<Tensor> params() noexcept { return params_; }
  std::span<const AdamState> states() const noexcept { return states_; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
};

}  // namespace dpl::inline DPL_PRECISION_NS
