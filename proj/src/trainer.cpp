// SPDX-License-Identifier: Apache-2.0
#include "dpl/trainer.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "dpl/image_tensor.hpp"
#include "dpl/ops.hpp"

namespace dpl::inline DPL_PRECISION_NS {

std::string_view to_string(TripletKind kind) noexcept {
  switch (kind) {
    case TripletKind::instance_self: return "instance_self";
    case TripletKind::task_oriented: return "task_oriented";
    case TripletKind::source_anchored: return "source_anchored";
  }
  return "?";
}

TripletKind parse_triplet_kind(std::string_view name) {
  for (auto k : {TripletKind::instance_self, TripletKind::task_oriented, TripletKind::source_anchored})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown triplet strategy '" + std::string(name) +
                              "' (expected instance_self, task_oriented or source_anchored)");
}

std::string_view to_string(FineTuneMode mode) noexcept {
  switch (mode) {
    case FineTuneMode::feature_selection: return "feature_selection";
    case FineTuneMode::full: return "full";
    case FineTuneMode::frozen: return "frozen";
  }
  return "?";
}

FineTuneMode parse_fine_tune_mode(std::string_view name) {
  for (auto m : {FineTuneMode::feature_selection, FineTuneMode::full, FineTuneMode::frozen})
    if (name == to_string(m)) return m;
  throw std::invalid_argument("unknown fine-tune mode '" + std::string(name) +
                              "' (expected feature_selection, full or frozen)");
}

void TripletStrategy::validate() const {
  if (kind == TripletKind::task_oriented && !distortion)
    throw std::invalid_argument("task_oriented triplets require a distortion");
  if (kind != TripletKind::task_oriented && distortion)
    throw std::invalid_argument(std::string(to_string(kind)) + " triplets must not carry a distortion");
  if (distortion) distortion->validate();
  if (crop_size == 0 || crop_size % 4 != 0)
    throw std::invalid_argument("triplet crop size must be a positive multiple of 4, got " + std::to_string(crop_size));
}

Triplet build_triplet(const TripletStrategy& strategy, const Image& x, const Image& y, const Image& x_tilde, Rng& rng) {
  strategy.validate();
  for (const Image* im : {&x, &y, &x_tilde}) {
    if (im->height() != y.height() || im->width() != y.width())
      throw std::invalid_argument("build_triplet: x, y and x_tilde must share an extent");
  }
  if (y.height() < strategy.crop_size || y.width() < strategy.crop_size)
    throw std::invalid_argument("build_triplet: crop size " + std::to_string(strategy.crop_size) +
                                " exceeds image extent");
  const std::size_t s = strategy.crop_size;
  Triplet t;
  switch (strategy.kind) {
    case TripletKind::instance_self:
      t.anchor = random_crop(y, s, rng);
      t.positive = random_crop(y, s, rng);
      t.negative = random_crop(x_tilde, s, rng);
      t.anchor_source = "crop(Y)";
      t.positive_source = "crop(Y)";
      t.negative_source = "crop(X~)";
      break;
    case TripletKind::task_oriented: {
      const Image distorted = strategy.distortion->apply(y, rng);
      t.anchor = random_crop(distorted, s, rng);
      t.positive = random_crop(x_tilde, s, rng);
      t.negative = random_crop(y, s, rng);
      t.anchor_source = "crop(f_d(Y))";
      t.positive_source = "crop(X~)";
      t.negative_source = "crop(Y)";
      break;
    }
    case TripletKind::source_anchored:
      t.anchor = random_crop(x, s, rng);
      t.positive = random_crop(x, s, rng);
      t.negative = random_crop(x_tilde, s, rng);
      t.anchor_source = "crop(X)";
      t.positive_source = "crop(X)";
      t.negative_source = "crop(X~)";
      break;
  }
  return t;
}

void LossRecipe::validate() const {
  const double w[] = {perceptual, contextual, pixel_l1, color, texture};
  bool any = false;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("loss weights must be finite and ≥ 0");
    any = any || v > 0.0;
  }
  if (!any) throw std::invalid_argument("at least one loss weight must be positive");
  contextual_params.validate();
  if (!(color_sigma > 0.0)) throw std::invalid_argument("color sigma must be > 0");
}

void DplConfig::validate() const {
  triplet.validate();
  recipe.validate();
  if (accumulate < 1) throw std::invalid_argument("accumulate interval N must be ≥ 1");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw std::invalid_argument("margin must be ≥ 0");
  if (!(lr_generator > 0.0)) throw std::invalid_argument("generator learning rate must be > 0");
  if (!(lr_selector > 0.0)) throw std::invalid_argument("selector learning rate must be > 0");
}

NumericalHalt::NumericalHalt(std::size_t iteration, const std::string& what)
    : std::runtime_error("numerical halt at iteration " + std::to_string(iteration) + ": " + what),
      iteration_(iteration) {}

DplTrainer::DplTrainer(const DplConfig& config, DplNetworks& nets, std::uint64_t seed)
    : config_(config), nets_(nets), triplet_rng_(Rng(seed).split(0x7472697074ULL)) {
  config_.validate();
  generator_opt_ = Adam(tensors_of(nets_.f.named_parameters()), AdamOptions{.lr = config_.lr_generator});
  selector_opt_ = Adam(tensors_of(selector_parameters()), AdamOptions{.lr = config_.lr_selector});
  for (auto& t : generator_opt_.params()) t.zero_grad();
  for (auto& t : selector_opt_.params()) t.zero_grad();
  freeze_all();
}

NamedParams DplTrainer::selector_parameters() const {
  switch (config_.mode) {
    case FineTuneMode::feature_selection: return nets_.phi.named_parameters();
    case FineTuneMode::full: return nets_.psi.named_parameters();
    case FineTuneMode::frozen: return {};
  }
  return {};
}

void DplTrainer::freeze_all() const {
  nets_.f.set_trainable(false);
  nets_.psi.set_trainable(false);
  nets_.phi.set_trainable(false);
}

FeatureSet DplTrainer::features(Tape& tape, const Tensor& image) const {
  auto h = nets_.psi.forward(tape, image);
  if (config_.mode == FineTuneMode::feature_selection) return nets_.phi.forward(tape, h);
  return h;
}

double DplTrainer::loss_value_or_halt(const Tensor& loss, const char* what) const {
  const double v = static_cast<double>(loss.item());
  if (!std::isfinite(v)) throw NumericalHalt(iteration_, std::string(what) + " is " + std::to_string(v));
  return v;
}

GeneratorStepResult DplTrainer::generator_step(const Image& x, const Image& y) {
  freeze_all();
  nets_.f.set_trainable(true);

  Tape tape;
  const auto xt = image_to_tensor(x);
  const auto yt = image_to_tensor(y);
  auto out = nets_.f.forward(tape, xt);

  GeneratorStepResult r;
  const auto& w = config_.recipe;
  Tensor total;
  auto add_term = [&](double weight, const Tensor& term, double& component) {
    component = static_cast<double>(term.item());
    auto weighted = ops::scale(tape, term, static_cast<real>(weight));
    total = total.defined() ? ops::add(tape, total, weighted) : weighted;
  };
  if (w.perceptual > 0.0 || w.contextual > 0.0) {
    const auto fo = features(tape, out);
    Tape unused;
    const auto fy = features(unused, yt);
    if (w.perceptual > 0.0) add_term(w.perceptual, losses::perceptual(tape, fo, fy), r.components.perceptual);
    if (w.contextual > 0.0)
      add_term(w.contextual, losses::contextual(tape, fo, fy, w.contextual_params), r.components.contextual);
  }
  if (w.pixel_l1 > 0.0) add_term(w.pixel_l1, losses::pixel(tape, losses::PixelKind::l1, out, yt), r.components.pixel_l1);
  if (w.color > 0.0) add_term(w.color, losses::color(tape, out, yt, w.color_sigma), r.components.color);
  if (w.texture > 0.0) add_term(w.texture, losses::texture(tape, out, yt), r.components.texture);

  r.loss = loss_value_or_halt(total, "generator loss");
  r.x_tilde = tensor_to_image(out);
  r.x_tilde_tensor = out.detach();
  if (total.requires_grad()) {
    tape.backward(total);
    generator_opt_.step();
  }
  generator_opt_.zero_grad();
  nets_.f.set_trainable(false);
  return r;
}

Tensor DplTrainer::selector_loss(Tape& tape, const Triplet& triplet) const {
  const auto a = features(tape, image_to_tensor(triplet.anchor));
  const auto p = features(tape, image_to_tensor(triplet.positive));
  const auto n = features(tape, image_to_tensor(triplet.negative));
  return losses::triplet(tape, a, p, n, config_.margin);
}

double DplTrainer::selector_accumulate(const Triplet& triplet) {
  if (config_.mode == FineTuneMode::frozen)
    throw std::logic_error("selector_accumulate called in frozen mode");
  if (accumulated_ >= config_.accumulate)
    throw std::logic_error("selector_accumulate: " + std::to_string(accumulated_) +
                           " contributions pending, apply before accumulating more");
  freeze_all();
  dpl::set_trainable(selector_parameters(), true);
  Tape tape;
  const auto loss = selector_loss(tape, triplet);
  const double v = loss_value_or_halt(loss, "triplet loss");
  if (loss.requires_grad()) tape.backward(loss);
  dpl::set_trainable(selector_parameters(), false);
  ++accumulated_;
  return v;
}

void DplTrainer::selector_apply() {
  if (config_.mode == FineTuneMode::frozen) throw std::logic_error("selector_apply called in frozen mode");
  if (accumulated_ != config_.accumulate)
    throw std::logic_error("selector_apply: " + std::to_string(accumulated_) + " of " +
                           std::to_string(config_.accumulate) + " contributions accumulated");
  selector_opt_.step();
  selector_opt_.zero_grad();
  accumulated_ = 0;
}

namespace {

struct Hashes {
  std::uint64_t f, psi, phi;
};

Hashes hash_all(const DplNetworks& n) {
  return {parameter_hash(n.f.named_parameters()), parameter_hash(n.psi.named_parameters()),
          parameter_hash(n.phi.named_parameters())};
}

void expect_same(std::uint64_t before, std::uint64_t after, const char* net, const char* phase, std::size_t it) {
  if (before != after)
    throw std::logic_error(std::string(net) + " parameters changed during " + phase + " at iteration " +
                           std::to_string(it));
}

}  // namespace

IterationRecord DplTrainer::step(const Image& x, const Image& y) {
  IterationRecord rec;
  rec.iteration = iteration_;

  Hashes h0{};
  if (audit_) h0 = hash_all(nets_);
  auto g = generator_step(x, y);
  rec.generator_loss = g.loss;
  rec.components = g.components;
  if (audit_) {
    const auto h1 = hash_all(nets_);
    expect_same(h0.psi, h1.psi, "psi", "generator step", iteration_);
    expect_same(h0.phi, h1.phi, "phi", "generator step", iteration_);
    h0 = h1;
    ++freeze_checks_;
  }

  if (config_.mode != FineTuneMode::frozen) {
    const auto triplet = build_triplet(config_.triplet, x, y, g.x_tilde, triplet_rng_);
    rec.d_c = selector_accumulate(triplet);
    if (accumulated_ == config_.accumulate) {
      selector_apply();
      rec.selector_applied = true;
    }
    if (audit_) {
      const auto h1 = hash_all(nets_);
      expect_same(h0.f, h1.f, "generator", "selector step", iteration_);
      if (config_.mode == FineTuneMode::feature_selection) expect_same(h0.psi, h1.psi, "psi", "selector step", iteration_);
      if (config_.mode == FineTuneMode::full) expect_same(h0.phi, h1.phi, "phi", "selector step", iteration_);
      ++freeze_checks_;
    }
  }

  rec.f_norm = parameter_norm(nets_.f.named_parameters());
  rec.selector_norm = parameter_norm(selector_parameters());
  last_output_ = std::move(g.x_tilde);
  ++iteration_;
  return rec;
}

TrainingResult run_training(const DplConfig& config, std::span<const ImagePair> pairs, DplNetworks& nets,
                            std::uint64_t seed, const IterationCallback& on_iteration, bool freeze_audit) {
  if (pairs.empty()) throw std::invalid_argument("run_training: empty dataset");
  DplTrainer trainer(config, nets, seed);
  trainer.set_freeze_audit(freeze_audit);
  Rng data_rng = Rng(seed).split(0x64617461ULL);

  TrainingResult result;
  result.history.reserve(config.iterations);
  std::vector<std::size_t> order(pairs.size());
  std::size_t cursor = order.size();
  for (std::size_t it = 0; it < config.iterations; ++it) {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(data_rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
      cursor = 0;
    }
    const auto& pair = pairs[order[cursor++]];
    Image x = pair.x, y = pair.y;
    if (config.augment) {
      const auto draw = draw_augment(data_rng);
      x = apply_augment(x, draw);
      y = apply_augment(y, draw);
    }
    try {
      result.history.push_back(trainer.step(x, y));
    } catch (const NumericalHalt& halt) {
      result.halt = halt;
      break;
    }
    if (on_iteration) on_iteration(result.history.back(), x, trainer.last_output(), y);
  }
  return result;
}

}  // namespace dpl::inline DPL_PRECISION_NS
