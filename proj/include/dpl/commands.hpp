// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dpl/checkpoint.hpp"
#include "dpl/experiment.hpp"
#include "dpl/pretrain.hpp"
#include "dpl/trainer.hpp"
#include "dpl/synthetic.hpp"

namespace dpl::inline DPL_PRECISION_NS {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitPretrainGate = 2, kExitNumericalHalt = 3 };

struct Dataset {
  std::vector<ImagePair> train;
  std::vector<ImagePair> val;
};

/// The pairs gen-data writes for `config` (task, size, counts, seed).
Dataset make_dataset(const ExperimentConfig& config);

struct PretrainOutcome {
  FeatureNetPsi psi;
  PretrainResult result;
};

/// Pretraining exactly as the pretrain command runs it, without files.
PretrainOutcome pretrain_from_config(const ExperimentConfig& config);

struct TrainOutcome {
  DplNetworks nets;
  TrainingResult result;
};

/// Training exactly as the train command runs it: networks seeded from
/// config.seed, psi weights copied from `psi_weights`.
TrainOutcome train_from_config(const ExperimentConfig& config, std::span<const ImagePair> pairs,
                               const NamedTensors& psi_weights, const IterationCallback& on_iteration = {},
                               bool freeze_audit = false);

/// Writes <data_dir>/{train,val}/NNNN_{x,y}.ppm and a manifest per split.
void cmd_gen_data(const ExperimentConfig& config, std::ostream& log);

/// Loads a split written by cmd_gen_data, in manifest order.
std::vector<ImagePair> load_split(const std::filesystem::path& split_dir);

/// Pretrains Psi on fresh synthetic textures and writes its checkpoint and
/// <out_dir>/pretrain_log.csv. Returns kExitPretrainGate if the target
/// accuracy was not reached.
int cmd_pretrain(const ExperimentConfig& config, std::ostream& log);

/// DPL training on <data_dir>/train. Writes the F checkpoint,
/// <out_dir>/history.csv and <out_dir>/samples/iter_NNNN.ppm (x | F(x) | y)
/// every 500 iterations. Returns kExitNumericalHalt after flushing history
/// if training diverged.
int cmd_train(const ExperimentConfig& config, std::ostream& log);

/// Scores the F checkpoint on <data_dir>/val into <out_dir>/report.csv.
void cmd_eval(const ExperimentConfig& config, std::ostream& log);

/// Applies the configured triplet distortion (or `kind`, if non-empty) to a PPM.
void cmd_distort(const ExperimentConfig& config, const std::filesystem::path& input,
                 const std::filesystem::path& output, const std::string& kind, std::ostream& log);

std::string history_csv_header();
std::string history_csv_row(const IterationRecord& record);

}  // namespace dpl::inline DPL_PRECISION_NS
