#include <gtest/gtest.h>

#include "pgnn/config.hpp"
#include "pgnn/errors.hpp"
#include "test_util.hpp"

namespace pgnn {
namespace {

TEST(RunConfig, EmptyDocumentKeepsDefaults) {
  const auto c = parse_run_config("{}");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.generator.grid, (GridSpec{64, 64}));
  EXPECT_EQ(c.train.epochs, 55);
  EXPECT_EQ(c.train.window_lo, 25);
  EXPECT_EQ(c.test_size, 150);
  EXPECT_EQ(c.train_sizes, (std::vector<int>{15, 25, 50, 75, 100}));
  EXPECT_NO_THROW(c.validate());
}

TEST(RunConfig, SectionsOverlayBase) {
  const auto c = parse_run_config(R"({
    "seed": 9,
    "grid": {"height": 32},
    "scenario_ranges": {"diffusivity": [0.1, 0.15], "modes": 16},
    "noise": {"sigma_field": 0.0, "circle_count": [0, 2]},
    "colormap": {"low_rgb": [250, 250, 10]},
    "train": {"epochs": 10, "window": [5, 10], "fidelity_weight": 0.5},
    "bench": {"train_sizes": [15, 30], "reps": 2, "variant": "resnet18", "random_labels": true}
  })");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.generator.grid.height, 32);
  EXPECT_EQ(c.generator.grid.width, 64);
  EXPECT_EQ(c.generator.scenario.diffusivity, (Range{0.1, 0.15}));
  EXPECT_EQ(c.generator.scenario.modes, 16);
  EXPECT_EQ(c.generator.noise.sigma_field, 0.0);
  EXPECT_EQ(c.generator.noise.sigma_label, 0.01);
  EXPECT_EQ(c.generator.noise.circle_count, (IntRange{0, 2}));
  EXPECT_EQ(c.generator.colormap.low_rgb, (std::array<int, 3>{250, 250, 10}));
  EXPECT_EQ(c.train.epochs, 10);
  EXPECT_EQ(c.train.window_hi, 10);
  EXPECT_EQ(c.train.fidelity_weight, 0.5);
  EXPECT_EQ(c.train.lr_inverse, 1e-3);
  EXPECT_EQ(c.train_sizes, (std::vector<int>{15, 30}));
  EXPECT_EQ(c.reps, 2);
  EXPECT_EQ(c.variant, RegressorVariant::resnet18);
  EXPECT_TRUE(c.random_labels);
  EXPECT_EQ(c.bench_config().base_seed, 9u);
}

TEST(RunConfig, UnknownKeysRejectedWithPath) {
  try {
    parse_run_config(R"({"noise": {"sigma": 0.1}})");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("noise.sigma"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_run_config(R"({"extra": 1})"), FormatError);
  EXPECT_THROW(parse_run_config(R"({"train": {"epochs": "many"}})"), FormatError);
  EXPECT_THROW(parse_run_config(R"({"bench": {"variant": "vgg"}})"), FormatError);
  EXPECT_THROW(parse_run_config("not json"), FormatError);
}

TEST(RunConfig, DumpParsesBackToSameConfig) {
  RunConfig c;
  c.seed = 77;
  c.generator.grid = {40, 48};
  c.train.lr_regressor = 3e-4;
  c.train_sizes = {10, 20};
  c.jobs = 3;
  const auto text = dump_run_config(c);
  const auto back = parse_run_config(text);
  EXPECT_EQ(dump_run_config(back), text);
  EXPECT_EQ(back.generator.grid, c.generator.grid);
  EXPECT_EQ(back.train.lr_regressor, 3e-4);
}

TEST(RunConfig, FileLoadingAndEffectiveConfig) {
  testing::TempDir dir;
  testing::spit(dir / "c.json", R"({"train": {"batch_size": 8}})");
  RunConfig base;
  base.seed = 4;
  const auto c = load_run_config(dir / "c.json", base);
  EXPECT_EQ(c.train.batch_size, 8);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_THROW(load_run_config(dir / "missing.json"), MissingFileError);
  write_effective_config(c, dir / "out");
  EXPECT_EQ(testing::slurp(dir / "out/effective_config.json"), dump_run_config(c));
}

TEST(RunConfig, ValidationCatchesBadValues) {
  auto c = parse_run_config(R"({"train": {"window": [30, 60]}})");
  EXPECT_THROW(c.validate(), ParameterError);
  c = parse_run_config(R"({"bench": {"reps": 0}})");
  EXPECT_THROW(c.validate(), ParameterError);
}

}  // namespace
}  // namespace pgnn
