// SPDX-License-Identifier: Apache-2.0
#include "dpl/commands.hpp"

#include <cstdio>
#include <optional>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dpl/checkpoint.hpp"
#include "dpl/image_tensor.hpp"
#include "dpl/metrics.hpp"
#include "dpl/networks.hpp"
#include "dpl/pretrain.hpp"
#include "dpl/trainer.hpp"

namespace dpl::inline DPL_PRECISION_NS {
namespace fs = std::filesystem;

namespace {

// Stream tags for Rng::split, so each consumer of the master seed is independent.
constexpr std::uint64_t kTrainData = 0x747261696eULL;
constexpr std::uint64_t kValData = 0x76616cULL;
constexpr std::uint64_t kTexTrain = 0x7465787472ULL;
constexpr std::uint64_t kTexHeldOut = 0x7465787468ULL;
constexpr std::uint64_t kPsiInit = 0x707369ULL;
constexpr std::uint64_t kPretrainOrder = 0x6f72646572ULL;
constexpr std::uint64_t kFInit = 0x66ULL;
constexpr std::uint64_t kPhiInit = 0x706869ULL;
constexpr std::uint64_t kTraining = 0x72756eULL;
constexpr std::uint64_t kDistort = 0x64697374ULL;

std::string pair_id(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04zu", index + 1);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create directory '" + dir.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_split(const fs::path& dir, std::span<const ImagePair> pairs, const ExperimentConfig& config) {
  ensure_dir(dir);
  std::string manifest;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto id = pair_id(i);
    save_ppm(pairs[i].x, dir / (id + "_x.ppm"));
    save_ppm(pairs[i].y, dir / (id + "_y.ppm"));
    manifest += id + " " + id + "_x.ppm " + id + "_y.ppm seed=" + std::to_string(config.seed) +
                " task=" + std::string(to_string(config.task)) + "\n";
  }
  write_text(dir / "manifest.txt", manifest);
}

void load_psi(FeatureNetPsi& psi, const fs::path& path) {
  load_bundle(psi.named_parameters(), load_checkpoint(path));
  psi.set_trainable(false);
}

}  // namespace

Dataset make_dataset(const ExperimentConfig& config) {
  config.validate();
  Rng root(config.seed);
  Rng train_rng = root.split(kTrainData), val_rng = root.split(kValData);
  return {generate_pairs(config.task, config.train_count, config.size, train_rng),
          generate_pairs(config.task, config.val_count, config.size, val_rng)};
}

void cmd_gen_data(const ExperimentConfig& config, std::ostream& log) {
  const auto data = make_dataset(config);
  write_split(config.data_dir / "train", data.train, config);
  write_split(config.data_dir / "val", data.val, config);
  log << "wrote " << data.train.size() << " train and " << data.val.size() << " val pairs ("
      << to_string(config.task) << ", " << config.size << "px, seed " << config.seed << ") to "
      << config.data_dir.string() << "\n";
}

std::vector<ImagePair> load_split(const fs::path& split_dir) {
  std::ifstream in(split_dir / "manifest.txt");
  if (!in) throw std::runtime_error("cannot read '" + (split_dir / "manifest.txt").string() + "' (run gen-data first)");
  std::vector<ImagePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id, x, y;
    if (!(ss >> id >> x >> y))
      throw std::runtime_error((split_dir / "manifest.txt").string() + ":" + std::to_string(line_no) +
                               ": expected '<id> <x.ppm> <y.ppm> ...'");
    pairs.push_back({load_ppm(split_dir / x), load_ppm(split_dir / y)});
  }
  if (pairs.empty()) throw std::runtime_error("no pairs listed in '" + (split_dir / "manifest.txt").string() + "'");
  return pairs;
}

PretrainOutcome pretrain_from_config(const ExperimentConfig& config) {
  config.validate();
  Rng root(config.seed);
  Rng tex_rng = root.split(kTexTrain), held_rng = root.split(kTexHeldOut), init_rng = root.split(kPsiInit),
      order_rng = root.split(kPretrainOrder);
  const auto train = generate_textures(config.pretrain_samples, config.size, tex_rng);
  const auto held_out = generate_textures(config.pretrain_held_out, config.size, held_rng);
  PretrainOutcome out{FeatureNetPsi(init_rng), {}};
  out.result = pretrain_psi(out.psi, train, held_out, config.pretrain, order_rng);
  return out;
}

int cmd_pretrain(const ExperimentConfig& config, std::ostream& log) {
  ensure_dir(config.out_dir);
  std::string csv = "epoch,train_loss,accuracy\n";
  std::optional<PretrainOutcome> outcome;
  try {
    outcome.emplace(pretrain_from_config(config));
  } catch (const PretrainGateError& e) {
    log << e.what() << "\n";
    write_text(config.out_dir / "pretrain_log.csv", csv + "final,," + format_number(e.accuracy()) + "\n");
    return kExitPretrainGate;
  }
  const auto& result = outcome->result;
  for (const auto& ep : result.epochs) {
    csv += std::to_string(ep.epoch) + "," + format_number(ep.train_loss) + "," + format_number(ep.accuracy) + "\n";
    log << "epoch " << ep.epoch << ": loss " << ep.train_loss << ", held-out accuracy " << ep.accuracy << "\n";
  }
  csv += "final,," + format_number(result.accuracy) + "\n";
  write_text(config.out_dir / "pretrain_log.csv", csv);
  save_checkpoint(to_bundle(outcome->psi.named_parameters()), config.psi_checkpoint());
  log << "wrote " << config.psi_checkpoint().string() << "\n";
  if (!result.reached_target) {
    log << "accuracy " << result.accuracy << " is below the " << config.pretrain.target_accuracy << " gate\n";
    return kExitPretrainGate;
  }
  return kExitOk;
}

std::string history_csv_header() {
  return "iteration,generator_loss,d_c,perceptual,contextual,pixel_l1,color,texture,selector_applied,f_norm,"
         "selector_norm\n";
}

std::string history_csv_row(const IterationRecord& r) {
  const auto& c = r.components;
  return std::to_string(r.iteration + 1) + "," + format_number(r.generator_loss) + "," + format_number(r.d_c) + "," +
         format_number(c.perceptual) + "," + format_number(c.contextual) + "," + format_number(c.pixel_l1) + "," +
         format_number(c.color) + "," + format_number(c.texture) + "," + (r.selector_applied ? "1" : "0") + "," +
         format_number(r.f_norm) + "," + format_number(r.selector_norm) + "\n";
}

TrainOutcome train_from_config(const ExperimentConfig& config, std::span<const ImagePair> pairs,
                               const NamedTensors& psi_weights, const IterationCallback& on_iteration,
                               bool freeze_audit) {
  config.validate();
  Rng root(config.seed);
  Rng f_rng = root.split(kFInit), phi_rng = root.split(kPhiInit), psi_rng = root.split(kPsiInit);
  TrainOutcome out{DplNetworks{GeneratorF(f_rng), FeatureNetPsi(psi_rng), SelectionPhi(phi_rng)}, {}};
  load_bundle(out.nets.psi.named_parameters(), psi_weights);
  out.nets.psi.set_trainable(false);
  out.result = run_training(config.dpl, pairs, out.nets, root.split(kTraining).next_u64(), on_iteration, freeze_audit);
  return out;
}

int cmd_train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto pairs = load_split(config.data_dir / "train");
  for (const auto& p : pairs)
    if (p.x.height() != config.size || p.x.width() != config.size)
      throw std::runtime_error("training pair extent does not match size = " + std::to_string(config.size));

  const auto psi_weights = load_checkpoint(config.psi_checkpoint());

  ensure_dir(config.out_dir);
  ensure_dir(config.out_dir / "samples");
  const auto history_path = config.out_dir / "history.csv";
  std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
  if (!history) throw std::runtime_error("cannot write '" + history_path.string() + "'");
  history << history_csv_header();

  auto on_iteration = [&](const IterationRecord& rec, const Image& x, const Image& x_tilde, const Image& y) {
    history << history_csv_row(rec);
    const auto done = rec.iteration + 1;
    if (done % 500 == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "iter_%04zu.ppm", done);
      const Image panels[] = {x, x_tilde, y};
      save_ppm(hconcat(panels), config.out_dir / "samples" / name);
    }
  };
  const auto outcome = train_from_config(config, pairs, psi_weights, on_iteration);
  const auto& result = outcome.result;
  history.flush();
  if (result.halt) {
    log << result.halt->what() << "\n";
    return kExitNumericalHalt;
  }
  save_checkpoint(to_bundle(outcome.nets.f.named_parameters()), config.f_checkpoint());
  log << "trained " << result.history.size() << " iterations (" << to_string(config.dpl.mode) << "); wrote "
      << config.f_checkpoint().string() << "\n";
  return kExitOk;
}

void cmd_eval(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const auto pairs = load_split(config.data_dir / "val");
  Rng root(config.seed);
  Rng f_rng = root.split(kFInit), psi_rng = root.split(kPsiInit);
  GeneratorF f(f_rng);
  load_bundle(f.named_parameters(), load_checkpoint(config.f_checkpoint()));
  f.set_trainable(false);
  FeatureNetPsi psi(psi_rng);
  load_psi(psi, config.psi_checkpoint());

  const auto report = evaluate(f, psi, pairs);
  ensure_dir(config.out_dir);
  write_report_csv(report, config.out_dir / "report.csv", config.metrics);
  log << "evaluated " << report.count() << " pairs: psnr " << report.mean.psnr << " dB, ms_ssim "
      << report.mean.ms_ssim << ", dfd " << report.mean.dfd << "\n";
}

void cmd_distort(const ExperimentConfig& config, const fs::path& input, const fs::path& output,
                 const std::string& kind, std::ostream& log) {
  DistortionSpec spec = config.dpl.triplet.distortion.value_or(DistortionSpec{});
  if (!kind.empty()) spec.kind = parse_distortion_kind(kind);
  spec.validate();
  Rng rng = Rng(config.seed).split(kDistort);
  save_ppm(spec.apply(load_ppm(input), rng), output);
  log << "wrote " << output.string() << " (" << to_string(spec.kind) << ")\n";
}

}  // namespace dpl::inline DPL_PRECISION_NS
