// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

#include "dpl/networks.hpp"
#include "dpl/tensor.hpp"

namespace dpl::inline DPL_PRECISION_NS::losses {

struct ContextualParams {
  double bandwidth = 0.5;
  double epsilon = 1e-5;

  void validate() const;
  bool operator==(const ContextualParams&) const = default;
};

/// Mean over taps of the mean squared difference.
Tensor perceptual(Tape& tape, const FeatureSet& fa, const FeatureSet& fb);

/// Contextual similarity loss, averaged over taps. Each spatial position of a
/// [C,H,W] tap is one C-vector; fa and fb may differ in spatial extent. Both
/// sets are centred on fb's mean vector, and vectors are normalised by
/// sqrt(|v|^2 + eps^2), so a zero vector is harmless.
Tensor contextual(Tape& tape, const FeatureSet& fa, const FeatureSet& fb, const ContextualParams& params = {});

/// Sum over taps of the mean squared difference.
Tensor feature_distance(Tape& tape, const FeatureSet& a, const FeatureSet& b);

/// max(d(a,p) - d(a,n) + margin, 0) with d = feature_distance.
Tensor triplet(Tape& tape, const FeatureSet& anchor, const FeatureSet& positive, const FeatureSet& negative,
               double margin);

/// Mean squared difference of Gaussian-blurred images.
Tensor color(Tape& tape, const Tensor& a, const Tensor& b, double sigma = 3.0);
/// Mean squared difference of luma.
Tensor texture(Tape& tape, const Tensor& a, const Tensor& b);

enum class PixelKind { l1, mse };
Tensor pixel(Tape& tape, PixelKind kind, const Tensor& a, const Tensor& b);

}  // namespace dpl::inline DPL_PRECISION_NS::losses
