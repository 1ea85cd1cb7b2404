// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration file: UTF-8 lines of `key = value`; `#` starts a
// comment; blank lines are ignored; dotted keys address nested settings
// (`dpl.margin = 1.0`). Ranges are written `lo,hi`.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dpl/pretrain.hpp"
#include "dpl/synthetic.hpp"
#include "dpl/trainer.hpp"

namespace dpl::inline DPL_PRECISION_NS {

struct ExperimentConfig {
  Task task = Task::colorcast;
  std::size_t size = 32;
  std::size_t train_count = 400;
  std::size_t val_count = 50;
  std::uint64_t seed = 1;
  DplConfig dpl;
  std::vector<std::string> metrics{"psnr", "ms_ssim", "dfd"};
  PretrainOptions pretrain;
  std::size_t pretrain_samples = 2000;
  std::size_t pretrain_held_out = 500;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
  // Empty means <out_dir>/psi.dplc and <out_dir>/f.dplc.
  std::filesystem::path psi_path;
  std::filesystem::path f_path;

  std::filesystem::path psi_checkpoint() const { return psi_path.empty() ? out_dir / "psi.dplc" : psi_path; }
  std::filesystem::path f_checkpoint() const { return f_path.empty() ? out_dir / "f.dplc" : f_path; }

  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string key;
  std::string help;
};

/// Every accepted key with a one-line description, in emission order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key; throws ConfigError naming the key (and `where`, if given).
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value,
                      std::string_view where = {});
std::string get_config_value(const ExperimentConfig& config, std::string_view key);

/// Applies the lines of `text` on top of `base`. `origin` names the source in
/// error messages. The result is not validated.
ExperimentConfig parse_config_text(std::string_view text, std::string_view origin = "config",
                                   ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

/// Full config as text; parse_config_text(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

/// Help text listing every key with its default.
std::string config_help();

}  // namespace dpl::inline DPL_PRECISION_NS
