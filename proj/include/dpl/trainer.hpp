// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/adam.hpp"
#include "dpl/image.hpp"
#include "dpl/losses.hpp"
#include "dpl/networks.hpp"
#include "dpl/rng.hpp"
#include "dpl/synthetic.hpp"
#include "dpl/transforms.hpp"

namespace dpl::inline DPL_PRECISION_NS {

enum class TripletKind { instance_self, task_oriented, source_anchored };
std::string_view to_string(TripletKind kind) noexcept;
TripletKind parse_triplet_kind(std::string_view name);

enum class FineTuneMode { feature_selection, full, frozen };
std::string_view to_string(FineTuneMode mode) noexcept;
FineTuneMode parse_fine_tune_mode(std::string_view name);

struct TripletStrategy {
  TripletKind kind = TripletKind::task_oriented;
  // Present iff kind == task_oriented.
  std::optional<DistortionSpec> distortion = DistortionSpec{};
  std::size_t crop_size = 24;

  void validate() const;
  bool operator==(const TripletStrategy&) const = default;
};

struct Triplet {
  Image anchor, positive, negative;
  // Where each role came from, e.g. "crop(f_d(Y))".
  std::string anchor_source, positive_source, negative_source;
};

/// Builds one triplet from source x, target y and generator output x_tilde.
/// Every crop is drawn independently; the distortion is applied to the full
/// target before cropping.
Triplet build_triplet(const TripletStrategy& strategy, const Image& x, const Image& y, const Image& x_tilde, Rng& rng);

/// Weighted sum of generator losses. Feature losses use the fine-tuned
/// feature pathway, pixel-space losses use images directly.
struct LossRecipe {
  double perceptual = 1.0;
  double contextual = 0.0;
  double pixel_l1 = 0.0;
  double color = 0.0;
  double texture = 0.0;
  losses::ContextualParams contextual_params;
  double color_sigma = 3.0;

  void validate() const;
  bool operator==(const LossRecipe&) const = default;
};

struct DplConfig {
  TripletStrategy triplet;
  std::size_t accumulate = 4;
  double margin = 1.0;
  LossRecipe recipe;
  FineTuneMode mode = FineTuneMode::feature_selection;
  std::size_t iterations = 2000;
  double lr_generator = 1e-3;
  double lr_selector = 1e-3;
  // Joint flip/rotation of each training pair.
  bool augment = true;

  void validate() const;
  bool operator==(const DplConfig&) const = default;
};

class NumericalHalt : public std::runtime_error {
 public:
  NumericalHalt(std::size_t iteration, const std::string& what);
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

struct LossComponents {
  double perceptual = 0.0;
  double contextual = 0.0;
  double pixel_l1 = 0.0;
  double color = 0.0;
  double texture = 0.0;
};

struct GeneratorStepResult {
  double loss = 0.0;
  LossComponents components;
  // F(x) before this step's update.
  Image x_tilde;
  Tensor x_tilde_tensor;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double generator_loss = 0.0;
  double d_c = 0.0;
  LossComponents components;
  bool selector_applied = false;
  double f_norm = 0.0;
  double selector_norm = 0.0;
};

/// Networks taking part in a run. F is returned; psi and phi are scaffolding.
struct DplNetworks {
  GeneratorF f;
  FeatureNetPsi psi;
  SelectionPhi phi;
};

/// DPL training state machine: generator steps every iteration, triplet-loss
/// gradients accumulated every iteration, selector update every N.
class DplTrainer {
 public:
  DplTrainer(const DplConfig& config, DplNetworks& nets, std::uint64_t seed);

  const DplConfig& config() const noexcept { return config_; }
  std::size_t iteration() const noexcept { return iteration_; }
  std::size_t accumulated() const noexcept { return accumulated_; }

  /// Parameters the selector optimizer owns (Phi, Psi, or none when frozen).
  NamedParams selector_parameters() const;

  /// Features used by every feature loss: Phi(Psi(x)) in feature_selection
  /// mode, Psi(x) otherwise.
  FeatureSet features(Tape& tape, const Tensor& image) const;

  GeneratorStepResult generator_step(const Image& x, const Image& y);
  /// Adds one triplet's gradient to the selector's buffers; returns d_c.
  double selector_accumulate(const Triplet& triplet);
  /// Triplet loss on a caller-owned tape, without touching any state.
  Tensor selector_loss(Tape& tape, const Triplet& triplet) const;
  void selector_apply();

  /// One full training iteration on (x, y).
  IterationRecord step(const Image& x, const Image& y);
  /// F(x) computed by the most recent step().
  const Image& last_output() const noexcept { return last_output_; }

  /// When enabled, step() hashes every network around each phase and throws
  /// std::logic_error if a frozen parameter changed.
  void set_freeze_audit(bool enabled) noexcept { audit_ = enabled; }
  std::size_t freeze_checks() const noexcept { return freeze_checks_; }

 private:
  void freeze_all() const;
  double loss_value_or_halt(const Tensor& loss, const char* what) const;

  DplConfig config_;
  DplNetworks& nets_;
  Rng triplet_rng_;
  Adam generator_opt_;
  Adam selector_opt_;
  std::size_t iteration_ = 0;
  std::size_t accumulated_ = 0;
  bool audit_ = false;
  std::size_t freeze_checks_ = 0;
  Image last_output_;
};

struct TrainingResult {
  std::vector<IterationRecord> history;
  // Set when a NumericalHalt stopped the run; history holds the iterations before it.
  std::optional<NumericalHalt> halt;
};

/// Called after every iteration with the (augmented) pair and F(x) as seen
/// by that iteration.
using IterationCallback =
    std::function<void(const IterationRecord&, const Image& x, const Image& x_tilde, const Image& y)>;

/// Runs config.iterations steps over `pairs` in per-epoch shuffled order.
/// Pair order and augmentation come from a data stream independent of the
/// triplet stream, so runs that differ only in fine-tune settings see the
/// same samples.
TrainingResult run_training(const DplConfig& config, std::span<const ImagePair> pairs, DplNetworks& nets,
                            std::uint64_t seed, const IterationCallback& on_iteration = {},
                            bool freeze_audit = false);

}  // namespace dpl::inline DPL_PRECISION_NS
