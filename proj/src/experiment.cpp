// SPDX-License-Identifier: Apache-2.0
#include "dpl/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "dpl/metrics.hpp"

namespace dpl::inline DPL_PRECISION_NS {
namespace {

// Thrown by value parsers; the caller adds key and location.
struct BadValue {
  std::string message;
};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::size_t parse_size(std::string_view v) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw BadValue{"expected a non-negative integer, got '" + std::string(v) + "'"};
  return out;
}

std::uint64_t parse_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw BadValue{"expected an unsigned 64-bit integer, got '" + std::string(v) + "'"};
  return out;
}

double parse_double(std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw BadValue{"expected a finite number, got '" + std::string(v) + "'"};
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw BadValue{"expected true or false, got '" + std::string(v) + "'"};
}

Range parse_range(std::string_view v) {
  const auto comma = v.find(',');
  if (comma == std::string_view::npos) throw BadValue{"expected 'lo,hi', got '" + std::string(v) + "'"};
  Range r{parse_double(trim(v.substr(0, comma))), parse_double(trim(v.substr(comma + 1)))};
  if (r.lo > r.hi) throw BadValue{"range lower bound exceeds upper bound"};
  return r;
}

std::string range_str(const Range& r) { return format_number(r.lo) + "," + format_number(r.hi); }

std::vector<std::string> parse_metrics(std::string_view v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (item != "psnr" && item != "ms_ssim" && item != "dfd")
      throw BadValue{"unknown metric '" + std::string(item) + "' (expected psnr, ms_ssim or dfd)"};
    if (std::find(out.begin(), out.end(), item) != out.end())
      throw BadValue{"metric '" + std::string(item) + "' listed twice"};
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Fn>
auto enum_value(Fn&& parse, std::string_view v) {
  try {
    return parse(v);
  } catch (const std::invalid_argument& e) {
    throw BadValue{e.what()};
  }
}

DistortionSpec& distortion_of(ExperimentConfig& c) {
  if (!c.dpl.triplet.distortion)
    throw BadValue{"only valid when dpl.triplet.distortion is set (task_oriented triplets)"};
  return *c.dpl.triplet.distortion;
}

struct Field {
  std::string key;
  std::string help;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  // Omitted from emitted files when this returns false.
  std::function<bool(const ExperimentConfig&)> present = [](const ExperimentConfig&) { return true; };
};

Field size_field(std::string key, std::string help, std::size_t ExperimentConfig::*member, std::size_t min) {
  return {key, std::move(help), [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member, min](ExperimentConfig& c, std::string_view v) {
            const auto n = parse_size(v);
            if (n < min) throw BadValue{"must be ≥ " + std::to_string(min)};
            c.*member = n;
          }};
}

Field weight_field(std::string key, std::string help, double LossRecipe::*member) {
  return {key, std::move(help), [member](const ExperimentConfig& c) { return format_number(c.dpl.recipe.*member); },
          [member](ExperimentConfig& c, std::string_view v) {
            const double w = parse_double(v);
            if (w < 0.0) throw BadValue{"loss weights must be ≥ 0"};
            c.dpl.recipe.*member = w;
          }};
}

Field positive_field(std::string key, std::string help, std::function<double&(ExperimentConfig&)> ref) {
  return {key, std::move(help),
          [ref](const ExperimentConfig& c) { return format_number(ref(const_cast<ExperimentConfig&>(c))); },
          [ref](ExperimentConfig& c, std::string_view v) {
            const double x = parse_double(v);
            if (!(x > 0.0)) throw BadValue{"must be > 0"};
            ref(c) = x;
          }};
}

Field path_field(std::string key, std::string help, std::filesystem::path ExperimentConfig::*member) {
  return {key, std::move(help), [member](const ExperimentConfig& c) { return (c.*member).string(); },
          [member](ExperimentConfig& c, std::string_view v) { c.*member = std::filesystem::path(std::string(v)); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"task", "synthetic task: darken, colorcast, blur",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.task)); },
                 [](ExperimentConfig& c, std::string_view v) {
                   const auto t = enum_value(parse_task, v);
                   if (t == Task::textures) throw BadValue{"textures is the pretraining task, not a paired task"};
                   c.task = t;
                 }});
    f.push_back(size_field("size", "image side length in pixels (multiple of 4, ≥ 16)", &ExperimentConfig::size, 16));
    f.push_back(size_field("train_count", "training pairs", &ExperimentConfig::train_count, 1));
    f.push_back(size_field("val_count", "held-out pairs", &ExperimentConfig::val_count, 1));
    f.push_back({"seed", "master seed (DPL_SEED overrides the file, --seed overrides both)",
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); },
                 [](ExperimentConfig& c, std::string_view v) { c.seed = parse_u64(v); }});
    f.push_back({"metrics", "comma-separated subset of psnr,ms_ssim,dfd",
                 [](const ExperimentConfig& c) {
                   std::string s;
                   for (const auto& m : c.metrics) s += (s.empty() ? "" : ",") + m;
                   return s;
                 },
                 [](ExperimentConfig& c, std::string_view v) { c.metrics = parse_metrics(v); }});
    f.push_back(path_field("data_dir", "dataset directory (train/ and val/)", &ExperimentConfig::data_dir));
    f.push_back(path_field("out_dir", "output directory", &ExperimentConfig::out_dir));
    f.push_back(path_field("psi_path", "feature-network checkpoint (empty: <out_dir>/psi.dplc)",
                           &ExperimentConfig::psi_path));
    f.push_back(path_field("f_path", "generator checkpoint (empty: <out_dir>/f.dplc)", &ExperimentConfig::f_path));

    f.push_back({"dpl.mode", "fine-tune mode: feature_selection, full, frozen",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.dpl.mode)); },
                 [](ExperimentConfig& c, std::string_view v) { c.dpl.mode = enum_value(parse_fine_tune_mode, v); }});
    f.push_back({"dpl.iterations", "training iterations",
                 [](const ExperimentConfig& c) { return std::to_string(c.dpl.iterations); },
                 [](ExperimentConfig& c, std::string_view v) { c.dpl.iterations = parse_size(v); }});
    f.push_back({"dpl.accumulate", "accumulate interval N (iterations per selector update, ≥ 1)",
                 [](const ExperimentConfig& c) { return std::to_string(c.dpl.accumulate); },
                 [](ExperimentConfig& c, std::string_view v) {
                   const auto n = parse_size(v);
                   if (n < 1) throw BadValue{"accumulate interval N must be ≥ 1"};
                   c.dpl.accumulate = n;
                 }});
    f.push_back({"dpl.margin", "triplet margin (≥ 0)",
                 [](const ExperimentConfig& c) { return format_number(c.dpl.margin); },
                 [](ExperimentConfig& c, std::string_view v) {
                   const double m = parse_double(v);
                   if (m < 0.0) throw BadValue{"margin must be ≥ 0"};
                   c.dpl.margin = m;
                 }});
    f.push_back(positive_field("dpl.lr_generator", "Adam learning rate for F",
                               [](ExperimentConfig& c) -> double& { return c.dpl.lr_generator; }));
    f.push_back(positive_field("dpl.lr_selector", "Adam learning rate for the fine-tuned features",
                               [](ExperimentConfig& c) -> double& { return c.dpl.lr_selector; }));
    f.push_back({"dpl.augment", "joint random flips/rotations of training pairs",
                 [](const ExperimentConfig& c) { return std::string(c.dpl.augment ? "true" : "false"); },
                 [](ExperimentConfig& c, std::string_view v) { c.dpl.augment = parse_bool(v); }});
    f.push_back({"dpl.triplet.kind", "triplet strategy: instance_self, task_oriented, source_anchored",
                 [](const ExperimentConfig& c) { return std::string(to_string(c.dpl.triplet.kind)); },
                 [](ExperimentConfig& c, std::string_view v) {
                   auto& t = c.dpl.triplet;
                   t.kind = enum_value(parse_triplet_kind, v);
                   if (t.kind != TripletKind::task_oriented) t.distortion.reset();
                   else if (!t.distortion) t.distortion = DistortionSpec{};
                 }});
    f.push_back({"dpl.triplet.distortion", "anchor distortion: color_jitter, gaussian_blur, grayscale, none",
                 [](const ExperimentConfig& c) {
                   const auto& d = c.dpl.triplet.distortion;
                   return d ? std::string(to_string(d->kind)) : std::string("none");
                 },
                 [](ExperimentConfig& c, std::string_view v) {
                   auto& d = c.dpl.triplet.distortion;
                   if (v == "none") {
                     d.reset();
                     return;
                   }
                   const auto kind = enum_value(parse_distortion_kind, v);
                   if (!d) d = DistortionSpec{};
                   d->kind = kind;
                 }});
    const auto has_distortion = [](const ExperimentConfig& c) { return c.dpl.triplet.distortion.has_value(); };
    f.push_back({"dpl.triplet.blur_sigma", "gaussian_blur sigma range lo,hi",
                 [](const ExperimentConfig& c) {
                   return c.dpl.triplet.distortion ? range_str(c.dpl.triplet.distortion->blur_sigma) : std::string();
                 },
                 [](ExperimentConfig& c, std::string_view v) { distortion_of(c).blur_sigma = parse_range(v); },
                 has_distortion});
    f.push_back({"dpl.triplet.jitter_scale", "color_jitter per-channel scale range lo,hi",
                 [](const ExperimentConfig& c) {
                   return c.dpl.triplet.distortion ? range_str(c.dpl.triplet.distortion->jitter_scale) : std::string();
                 },
                 [](ExperimentConfig& c, std::string_view v) { distortion_of(c).jitter_scale = parse_range(v); },
                 has_distortion});
    f.push_back({"dpl.triplet.jitter_bias", "color_jitter per-channel bias range lo,hi",
                 [](const ExperimentConfig& c) {
                   return c.dpl.triplet.distortion ? range_str(c.dpl.triplet.distortion->jitter_bias) : std::string();
                 },
                 [](ExperimentConfig& c, std::string_view v) { distortion_of(c).jitter_bias = parse_range(v); },
                 has_distortion});
    f.push_back({"dpl.triplet.crop", "triplet crop side (multiple of 4, ≤ size)",
                 [](const ExperimentConfig& c) { return std::to_string(c.dpl.triplet.crop_size); },
                 [](ExperimentConfig& c, std::string_view v) {
                   const auto n = parse_size(v);
                   if (n == 0 || n % 4 != 0) throw BadValue{"crop must be a positive multiple of 4"};
                   c.dpl.triplet.crop_size = n;
                 }});
    f.push_back(weight_field("dpl.loss.perceptual", "weight of the feature-space perceptual loss",
                             &LossRecipe::perceptual));
    f.push_back(weight_field("dpl.loss.contextual", "weight of the contextual loss", &LossRecipe::contextual));
    f.push_back(weight_field("dpl.loss.pixel_l1", "weight of the pixel L1 loss", &LossRecipe::pixel_l1));
    f.push_back(weight_field("dpl.loss.color", "weight of the blurred-color loss", &LossRecipe::color));
    f.push_back(weight_field("dpl.loss.texture", "weight of the grayscale texture loss", &LossRecipe::texture));
    f.push_back(positive_field("dpl.loss.contextual_h", "contextual bandwidth h",
                               [](ExperimentConfig& c) -> double& { return c.dpl.recipe.contextual_params.bandwidth; }));
    f.push_back(positive_field("dpl.loss.contextual_eps", "contextual epsilon",
                               [](ExperimentConfig& c) -> double& { return c.dpl.recipe.contextual_params.epsilon; }));
    f.push_back(positive_field("dpl.loss.color_sigma", "blur sigma of the color loss",
                               [](ExperimentConfig& c) -> double& { return c.dpl.recipe.color_sigma; }));

    f.push_back({"pretrain.epochs", "pretraining epoch budget",
                 [](const ExperimentConfig& c) { return std::to_string(c.pretrain.epochs); },
                 [](ExperimentConfig& c, std::string_view v) {
                   const auto n = parse_size(v);
                   if (n < 1) throw BadValue{"must be ≥ 1"};
                   c.pretrain.epochs = n;
                 }});
    f.push_back(size_field("pretrain.samples", "texture samples per epoch", &ExperimentConfig::pretrain_samples, 1));
    f.push_back(size_field("pretrain.held_out", "held-out texture samples", &ExperimentConfig::pretrain_held_out, 1));
    f.push_back(positive_field("pretrain.lr", "pretraining Adam learning rate",
                               [](ExperimentConfig& c) -> double& { return c.pretrain.lr; }));
    f.push_back({"pretrain.target_accuracy", "held-out accuracy that ends pretraining and passes the gate",
                 [](const ExperimentConfig& c) { return format_number(c.pretrain.target_accuracy); },
                 [](ExperimentConfig& c, std::string_view v) {
                   const double a = parse_double(v);
                   if (a < 0.0 || a > 1.0) throw BadValue{"must lie in [0,1]"};
                   c.pretrain.target_accuracy = a;
                 }});
    return f;
  }();
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

std::string location(std::string_view key, std::string_view where) {
  return where.empty() ? std::string(key) : std::string(where) + ": " + std::string(key);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (size < 16 || size % 4 != 0) throw ConfigError("size: must be a multiple of 4 and ≥ 16");
  if (dpl.triplet.crop_size > size) throw ConfigError("dpl.triplet.crop: must not exceed size");
  if (metrics.empty()) throw ConfigError("metrics: at least one metric required");
  if (size < 32 && std::find(metrics.begin(), metrics.end(), "ms_ssim") != metrics.end())
    throw ConfigError("metrics: ms_ssim needs size ≥ 32");
  if (train_count == 0 || val_count == 0) throw ConfigError("train_count/val_count: must be ≥ 1");
  try {
    dpl.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.find("margin") != std::string::npos) throw ConfigError("dpl.margin: " + what);
    if (what.find("distortion") != std::string::npos) throw ConfigError("dpl.triplet.distortion: " + what);
    throw ConfigError("dpl: " + what);
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& f : fields()) k.push_back({f.key, f.help});
    return k;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value, std::string_view where) {
  const Field* field = nullptr;
  try {
    field = &find_field(key);
  } catch (const ConfigError& e) {
    throw ConfigError(where.empty() ? std::string(e.what()) : std::string(where) + ": " + e.what());
  }
  try {
    field->set(config, trim(value));
  } catch (const BadValue& bad) {
    throw ConfigError(location(key, where) + ": " + bad.message);
  }
}

std::string get_config_value(const ExperimentConfig& config, std::string_view key) {
  return find_field(key).get(config);
}

ExperimentConfig parse_config_text(std::string_view text, std::string_view origin, ExperimentConfig base) {
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value', got '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": missing key before '='");
    set_config_value(base, key, line.substr(eq + 1), where);
  }
  return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string(), std::move(base));
}

std::string emit_config(const ExperimentConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    if (!f.present(config)) continue;
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string config_help() {
  const ExperimentConfig defaults;
  std::string out = "Configuration keys (file `key = value` or --key value), with defaults:\n";
  for (const auto& f : fields()) {
    std::string def = f.present(defaults) ? f.get(defaults) : std::string("(unset)");
    if (def.empty()) def = "(empty)";
    out += "  " + f.key + " = " + def + "\n      " + f.help + "\n";
  }
  return out;
}

}  // namespace dpl::inline DPL_PRECISION_NS
