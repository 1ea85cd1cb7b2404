// SPDX-License-Identifier: Apache-2.0
// dpl: dataset generation, feature-network pretraining, DPL training and
// evaluation from one configuration.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dpl/commands.hpp"
#include "dpl/experiment.hpp"
#include "dpl/pretrain.hpp"
#include "dpl/trainer.hpp"

int main(int argc, char** argv) {
  using namespace dpl;

  CLI::App app{"Disentangled perceptual learning on synthetic image tasks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(config_help() +
             "\nPrecedence: defaults < --config file < DPL_SEED (seed only) < command-line flags.\n"
             "Exit codes: 0 success, 1 usage/config error, 2 pretraining gate failure, 3 numerical halt.");

  std::string config_path;
  std::optional<std::string> seed_flag;
  bool print_config = false;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_flag("--print-config", print_config, "print the effective configuration before running");

  std::map<std::string, std::string> overrides;
  for (const auto& key : config_keys()) {
    if (key.key == "seed") continue;
    app.add_option("--" + key.key, overrides[key.key], key.help);
  }
  app.add_option("--seed", seed_flag, "master seed");

  auto* gen = app.add_subcommand("gen-data", "write paired train/val PPMs and manifests");
  auto* pre = app.add_subcommand("pretrain", "pretrain the feature network on synthetic textures");
  auto* train = app.add_subcommand("train", "train F with DPL and write its checkpoint, history.csv and samples");
  auto* eval = app.add_subcommand("eval", "score F on the val split into report.csv");
  auto* distort = app.add_subcommand("distort", "apply a distortion to one PPM");
  std::string input, output, kind;
  distort->add_option("--input", input, "input PPM")->required();
  distort->add_option("--output", output, "output PPM")->required();
  distort->add_option("--kind", kind, "color_jitter, gaussian_blur or grayscale (default: dpl.triplet.distortion)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    ExperimentConfig config;
    if (!config_path.empty()) config = load_config_file(config_path, config);
    if (const char* env = std::getenv("DPL_SEED"); env && *env) set_config_value(config, "seed", env, "DPL_SEED");
    for (const auto& key : config_keys()) {
      if (key.key == "seed") continue;
      if (app.count("--" + key.key) > 0) set_config_value(config, key.key, overrides[key.key], "--" + key.key);
    }
    if (seed_flag) set_config_value(config, "seed", *seed_flag, "--seed");
    config.validate();
    if (print_config) std::cout << emit_config(config);

    if (gen->parsed()) cmd_gen_data(config, std::cout);
    if (pre->parsed()) return cmd_pretrain(config, std::cout);
    if (train->parsed()) return cmd_train(config, std::cout);
    if (eval->parsed()) cmd_eval(config, std::cout);
    if (distort->parsed()) cmd_distort(config, input, output, kind, std::cout);
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PretrainGateError& e) {
    std::cerr << e.what() << "\n";
    return kExitPretrainGate;
  } catch (const NumericalHalt& e) {
    std::cerr << e.what() << "\n";
    return kExitNumericalHalt;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
