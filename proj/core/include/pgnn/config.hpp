#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pgnn/bench.hpp"
#include "pgnn/pipeline.hpp"
#include "pgnn/synth.hpp"

namespace pgnn {

/// Everything a CLI run depends on. The JSON file has the optional sections
/// `grid`, `scenario_ranges`, `noise`, `colormap`, `train`, `bench` and an
/// optional top-level `seed`; every key inside them is optional and unknown
/// keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  GeneratorConfig generator;
  TrainConfig train;
  std::vector<int> train_sizes{15, 25, 50, 75, 100};
  int test_size = 150;
  int reps = 10;
  RegressorVariant variant = RegressorVariant::resnet_small;
  int jobs = 1;
  bool random_labels = false;

  void validate() const;
  BenchConfig bench_config() const;
};

/// Overlays the JSON document onto `base`. Throws FormatError naming the
/// offending key.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Canonical JSON with every field spelled out.
std::string dump_run_config(const RunConfig& config);
void write_effective_config(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace pgnn
