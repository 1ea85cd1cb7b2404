// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpl/checkpoint.hpp"
#include "dpl/rng.hpp"
#include "dpl/tensor.hpp"

namespace dpl::inline DPL_PRECISION_NS {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;
using FeatureSet = std::vector<Tensor>;

struct Conv2dLayer {
  Tensor weight;  // [out, in, k, k]
  Tensor bias;    // [out]
  std::size_t stride = 1;
  std::size_t padding = 0;

  /// He-normal weights, zero bias.
  static Conv2dLayer he_init(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                             std::size_t padding, Rng& rng);
  static Conv2dLayer zeros(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
                           std::size_t padding);

  Tensor forward(Tape& tape, const Tensor& x) const;
};

/// Every parameter's requires_grad flag.
void set_trainable(const NamedParams& params, bool trainable);
/// FNV-1a over the raw parameter bytes, in order.
std::uint64_t parameter_hash(const NamedParams& params);
/// Euclidean norm over all parameter values.
double parameter_norm(const NamedParams& params);
std::vector<Tensor> tensors_of(const NamedParams& params);

NamedTensors to_bundle(const NamedParams& params);
/// Copies values from `bundle` into `params`; every name must be present
/// with a matching shape.
void load_bundle(const NamedParams& params, const NamedTensors& bundle);

/// Image-to-image generator: small encoder-decoder with a global additive
/// skip. The output head starts at zero, so a fresh generator is the identity.
class GeneratorF {
 public:
  explicit GeneratorF(Rng& rng);

  /// [3,H,W] -> [3,H,W]; H and W even and >= 8. Output is not clamped.
  Tensor forward(Tape& tape, const Tensor& x) const;

  NamedParams named_parameters() const;
  void set_trainable(bool trainable) const { dpl::set_trainable(named_parameters(), trainable); }

 private:
  Conv2dLayer enc1_, enc2_, enc3_, dec1_, head_;
};

/// Three-block CNN feature extractor with taps after each block and a
/// classification head used only for pretraining.
class FeatureNetPsi {
 public:
  static constexpr std::size_t kTapChannels[3] = {16, 32, 64};
  static constexpr std::size_t kClasses = 10;

  explicit FeatureNetPsi(Rng& rng);

  /// Taps [16,H,W], [32,H/2,W/2], [64,H/4,W/4]; H and W divisible by 4.
  FeatureSet forward(Tape& tape, const Tensor& x) const;
  /// Class logits [10] via global average pooling of the last tap.
  Tensor logits(Tape& tape, const Tensor& x) const;

  /// Backbone only (what a checkpoint holds).
  NamedParams named_parameters() const;
  NamedParams head_parameters() const;
  void set_trainable(bool trainable) const { dpl::set_trainable(named_parameters(), trainable); }

 private:
  Conv2dLayer conv1_, conv2_, conv3_;
  Tensor head_weight_, head_bias_;
};

/// Per-tap feature selection: 1x1 conv (C->C), relu, 1x1 conv (C->C/2).
class SelectionPhi {
 public:
  /// First conv starts at identity, second at a slice onto the first C/2
  /// channels, both perturbed by N(0, noise^2).
  SelectionPhi(Rng& rng, double noise = 0.01);

  FeatureSet forward(Tape& tape, const FeatureSet& features) const;

  NamedParams named_parameters() const;
  void set_trainable(bool trainable) const { dpl::set_trainable(named_parameters(), trainable); }

 private:
  struct Block {
    Conv2dLayer expand;
    Conv2dLayer reduce;
  };
  std::vector<Block> blocks_;
};

}  // namespace dpl::inline DPL_PRECISION_NS
