// SPDX-License-Identifier: Apache-2.0
#pragma once

// Differentiable tensor operations. Each op records a backward rule on the
// given tape when at least one input requires a gradient; otherwise it is a
// plain forward computation and the tape is left untouched.

#include <cstddef>
#include <span>
#include <vector>

#include "dpl/tensor.hpp"

namespace dpl::inline DPL_PRECISION_NS::ops {

enum class ElementwiseKind { add, sub, mul };

/// a (op) b where b has a's shape or is rank-0 (broadcast).
Tensor elementwise(Tape& tape, ElementwiseKind kind, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor scale(Tape& tape, const Tensor& x, real factor);
Tensor add_constant(Tape& tape, const Tensor& x, real constant);

Tensor relu(Tape& tape, const Tensor& x);
/// |x| with subgradient 0 at x == 0.
Tensor abs(Tape& tape, const Tensor& x);

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);
/// mean((a - b)^2) over all elements; shapes must match exactly.
Tensor mean_squared_error(Tape& tape, const Tensor& a, const Tensor& b);

/// Cross-correlation of input [C_in,H,W] with weight [C_out,C_in,k,k], zero
/// padding. Output [C_out, (H+2p-k)/s+1, (W+2p-k)/s+1].
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              std::size_t stride, std::size_t padding);

/// 2x2/stride-2 maximum; ties resolve to the first element in row-major
/// window order.
Tensor max_pool2(Tape& tape, const Tensor& x);
/// 2x2/stride-2 mean.
Tensor avg_pool2(Tape& tape, const Tensor& x);
/// Replicates every pixel into a 2x2 block.
Tensor upsample_nearest2(Tape& tape, const Tensor& x);

/// [C,H,W] -> [C] spatial mean.
Tensor global_avg_pool(Tape& tape, const Tensor& x);
/// weight [O,I] * x [I] + bias [O].
Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias);
/// -log softmax(logits)[label] for rank-1 logits.
Tensor cross_entropy(Tape& tape, const Tensor& logits, std::size_t label);

/// Separable Gaussian filter over every channel of [C,H,W]; radius ceil(3 sigma),
/// half-sample symmetric borders.
Tensor gaussian_blur(Tape& tape, const Tensor& x, double sigma);
/// BT.601 luma of [3,H,W] replicated into three channels.
Tensor grayscale(Tape& tape, const Tensor& x);

std::vector<real> softmax(std::span<const real> logits);

}  // namespace dpl::inline DPL_PRECISION_NS::ops
