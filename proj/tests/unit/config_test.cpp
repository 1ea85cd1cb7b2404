#include <doctest.h>

#include <string>

#include "dpl/experiment.hpp"

using namespace dpl;

TEST_CASE("empty config is all defaults") {
  const auto c = parse_config_text("");
  CHECK(c == ExperimentConfig{});
  CHECK(c.task == Task::colorcast);
  CHECK(c.size == 32);
  CHECK(c.dpl.accumulate == 4);
  CHECK(c.dpl.margin == 1.0);
  CHECK(c.dpl.mode == FineTuneMode::feature_selection);
  CHECK(parse_config_text("\n# only comments\n   \n") == ExperimentConfig{});
}

TEST_CASE("config values and comments") {
  const auto c = parse_config_text(
      "task = darken  # trailing comment\n"
      "size=48\n"
      "dpl.margin = 0.5\n"
      "dpl.mode = full\n"
      "dpl.triplet.kind = task_oriented\n"
      "dpl.triplet.distortion = gaussian_blur\n"
      "dpl.triplet.blur_sigma = 1.5,2.5\n"
      "dpl.loss.contextual = 0.25\n"
      "metrics = psnr,dfd\n"
      "pretrain.epochs = 3\n");
  CHECK(c.task == Task::darken);
  CHECK(c.size == 48);
  CHECK(c.dpl.margin == 0.5);
  CHECK(c.dpl.mode == FineTuneMode::full);
  REQUIRE(c.dpl.triplet.distortion);
  CHECK(c.dpl.triplet.distortion->kind == DistortionKind::gaussian_blur);
  CHECK(c.dpl.triplet.distortion->blur_sigma == Range{1.5, 2.5});
  CHECK(c.dpl.recipe.contextual == 0.25);
  CHECK(c.metrics == std::vector<std::string>{"psnr", "dfd"});
  CHECK(c.pretrain.epochs == 3);
  CHECK_NOTHROW(c.validate());
  CHECK(get_config_value(c, "dpl.margin") == "0.5");
}

TEST_CASE("config errors name the key and line") {
  CHECK_THROWS_WITH_AS(parse_config_text("seed = 3\ndpl.margin = -1\n", "run.cfg"),
                       "run.cfg:2: dpl.margin: margin must be ≥ 0", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("colour = red\n", "run.cfg"), doctest::Contains("run.cfg:1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("colour = red\n"), doctest::Contains("colour"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("size = big\n"), doctest::Contains("size"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("dpl.accumulate = -2\n"), doctest::Contains("dpl.accumulate"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("dpl.mode = partial\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("dpl.triplet.jitter_scale = 0.2,1.0\n").validate(), ConfigError);

  auto c = parse_config_text("size = 16\n");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = parse_config_text("size = 16\nmetrics = psnr\ndpl.triplet.crop = 16\n");
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("triplet kind and distortion interplay") {
  auto c = parse_config_text("dpl.triplet.kind = instance_self\n");
  CHECK_FALSE(c.dpl.triplet.distortion);
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(parse_config_text("dpl.triplet.kind = instance_self\ndpl.triplet.distortion = grayscale\n").validate(),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text("dpl.triplet.distortion = none\n").validate(), ConfigError);
}

TEST_CASE("config round trip") {
  const char* texts[] = {
      "",
      "task = blur\nseed = 99\ndpl.iterations = 17\ndpl.lr_generator = 0.00025\n",
      "dpl.triplet.kind = source_anchored\ndpl.mode = frozen\nmetrics = ms_ssim\nout_dir = some dir/x\n",
      "dpl.triplet.distortion = color_jitter\ndpl.triplet.jitter_bias = -0.2,0.05\ndpl.loss.color_sigma = 2.5\n"
      "dpl.loss.contextual_h = 0.1\ndpl.loss.contextual_eps = 1e-7\npsi_path = p.dplc\ndpl.augment = false\n",
  };
  for (const char* text : texts) {
    CAPTURE(text);
    const auto c = parse_config_text(text);
    const auto emitted = emit_config(c);
    CHECK(parse_config_text(emitted) == c);
    CHECK(emit_config(parse_config_text(emitted)) == emitted);
  }
}

TEST_CASE("help lists every key") {
  const auto help = config_help();
  for (const auto& k : config_keys()) CHECK(help.find(k.key) != std::string::npos);
  CHECK(help.find("colorcast") != std::string::npos);
}
