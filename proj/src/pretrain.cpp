// SPDX-License-Identifier: Apache-2.0
#include "dpl/pretrain.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "dpl/adam.hpp"
#include "dpl/image_tensor.hpp"
#include "dpl/ops.hpp"

namespace dpl::inline DPL_PRECISION_NS {

double classification_accuracy(const FeatureNetPsi& psi, std::span<const LabeledImage> samples) {
  if (samples.empty()) throw std::invalid_argument("classification_accuracy: no samples");
  std::size_t correct = 0;
  for (const auto& s : samples) {
    Tape tape;
    const auto logits = psi.logits(tape, image_to_tensor(s.image));
    const auto v = logits.data();
    const auto best = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    if (best == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

PretrainResult pretrain_psi(FeatureNetPsi& psi, std::span<const LabeledImage> train,
                            std::span<const LabeledImage> held_out, const PretrainOptions& options, Rng& rng) {
  if (train.empty() || held_out.empty()) throw std::invalid_argument("pretrain: empty train or held-out set");
  if (options.epochs == 0) throw std::invalid_argument("pretrain: epoch budget must be ≥ 1");

  auto params = psi.named_parameters();
  const auto head = psi.head_parameters();
  params.insert(params.end(), head.begin(), head.end());
  set_trainable(params, true);
  Adam opt(tensors_of(params), AdamOptions{.lr = options.lr});

  PretrainResult result;
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    double loss_sum = 0.0;
    for (auto idx : order) {
      const auto& s = train[idx];
      Tape tape;
      const auto loss =
          ops::cross_entropy(tape, psi.logits(tape, image_to_tensor(s.image)), static_cast<std::size_t>(s.label));
      loss_sum += static_cast<double>(loss.item());
      tape.backward(loss);
      opt.step();
      opt.zero_grad();
    }
    const double acc = classification_accuracy(psi, held_out);
    result.epochs.push_back({epoch, loss_sum / static_cast<double>(train.size()), acc});
    result.accuracy = acc;
    if (acc >= options.target_accuracy) {
      result.reached_target = true;
      break;
    }
  }
  set_trainable(params, false);
  const double floor = std::min(options.floor_accuracy, options.target_accuracy);
  if (result.accuracy < floor) {
    char msg[200];
    std::snprintf(msg, sizeof msg,
                  "pretraining reached only %.3f held-out accuracy (< %.2f); try another seed or a larger epoch budget",
                  result.accuracy, floor);
    throw PretrainGateError(result.accuracy, msg);
  }
  return result;
}

}  // namespace dpl::inline DPL_PRECISION_NS
