// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dpl/networks.hpp"
#include "dpl/rng.hpp"
#include "dpl/synthetic.hpp"

namespace dpl::inline DPL_PRECISION_NS {

struct PretrainOptions {
  std::size_t epochs = 5;
  double lr = 1e-3;
  // Training stops at the first epoch whose held-out accuracy reaches this.
  double target_accuracy = 0.8;
  // Below this (or the target, if lower) after the full budget, pretraining is an error.
  double floor_accuracy = 0.5;
  bool operator==(const PretrainOptions&) const = default;
};

struct PretrainEpoch {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double accuracy = 0.0;
};

struct PretrainResult {
  std::vector<PretrainEpoch> epochs;
  double accuracy = 0.0;
  bool reached_target = false;
};

class PretrainGateError : public std::runtime_error {
 public:
  PretrainGateError(double accuracy, const std::string& what) : std::runtime_error(what), accuracy_(accuracy) {}
  double accuracy() const noexcept { return accuracy_; }

 private:
  double accuracy_;
};

/// Fraction of `samples` whose argmax logit equals the label.
double classification_accuracy(const FeatureNetPsi& psi, std::span<const LabeledImage> samples);

/// Cross-entropy training of Psi and its head with Adam, one sample per step,
/// shuffled per epoch. Leaves Psi frozen. Throws PretrainGateError when the
/// final held-out accuracy is below options.floor_accuracy.
PretrainResult pretrain_psi(FeatureNetPsi& psi, std::span<const LabeledImage> train,
                            std::span<const LabeledImage> held_out, const PretrainOptions& options, Rng& rng);

}  // namespace dpl::inline DPL_PRECISION_NS
