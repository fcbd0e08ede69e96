#include "pgnn/config.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "pgnn/errors.hpp"

namespace fs = std::filesystem;

namespace pgnn {

using detail::json;
using detail::ObjectReader;

void RunConfig::validate() const {
  generator.validate();
  train.validate();
  bench_config().validate();
}

BenchConfig RunConfig::bench_config() const {
  BenchConfig b;
  b.train_sizes = train_sizes;
  b.test_size = test_size;
  b.reps = reps;
  b.variant = variant;
  b.base_seed = seed;
  b.generator = generator;
  b.train = train;
  b.jobs = jobs;
  b.random_labels = random_labels;
  return b;
}

namespace {

void merge_train(const json& j, TrainConfig& t) {
  ObjectReader r(j, "train");
  r.get("epochs", t.epochs);
  if (const json* w = r.find("window")) {
    if (!w->is_array() || w->size() != 2) throw FormatError("train.window: expected [lo, hi]");
    t.window_lo = ObjectReader::as<int>((*w)[0], "train.window[0]");
    t.window_hi = ObjectReader::as<int>((*w)[1], "train.window[1]");
  }
  r.get("lr_inverse", t.lr_inverse);
  r.get("lr_regressor", t.lr_regressor);
  r.get("batch_size", t.batch_size);
  r.get("fidelity_weight", t.fidelity_weight);
  r.finish();
}

void merge_bench(const json& j, RunConfig& c) {
  ObjectReader r(j, "bench");
  if (const json* v = r.find("train_sizes")) {
    if (!v->is_array()) throw FormatError("bench.train_sizes: expected an array of integers");
    c.train_sizes.clear();
    for (std::size_t k = 0; k < v->size(); ++k) {
      c.train_sizes.push_back(ObjectReader::as<int>((*v)[k], "bench.train_sizes[" + std::to_string(k) + "]"));
    }
  }
  r.get("test_size", c.test_size);
  r.get("reps", c.reps);
  if (const json* v = r.find("variant")) {
    try {
      c.variant = parse_variant(ObjectReader::as<std::string>(*v, "bench.variant"));
    } catch (const ParameterError& e) {
      throw FormatError(std::string("bench.variant: ") + e.what());
    }
  }
  r.get("jobs", c.jobs);
  r.get("random_labels", c.random_labels);
  r.finish();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  const json j = detail::parse_json(text, "config");
  ObjectReader r(j, "");
  r.get("seed", base.seed);
  if (const json* v = r.find("grid")) detail::merge(*v, base.generator.grid, "grid");
  if (const json* v = r.find("scenario_ranges")) detail::merge(*v, base.generator.scenario, "scenario_ranges");
  if (const json* v = r.find("noise")) detail::merge(*v, base.generator.noise, "noise");
  if (const json* v = r.find("colormap")) detail::merge(*v, base.generator.colormap, "colormap");
  if (const json* v = r.find("train")) merge_train(*v, base.train);
  if (const json* v = r.find("bench")) merge_bench(*v, base);
  r.finish();
  return base;
}

RunConfig load_run_config(const fs::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!fs::exists(path)) throw MissingFileError("config", path.string());
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), std::move(base));
}

std::string dump_run_config(const RunConfig& c) {
  const json j{{"seed", c.seed},
               {"grid", detail::to_json(c.generator.grid)},
               {"scenario_ranges", detail::to_json(c.generator.scenario)},
               {"noise", detail::to_json(c.generator.noise)},
               {"colormap", detail::to_json(c.generator.colormap)},
               {"train",
                {{"epochs", c.train.epochs},
                 {"window", {c.train.window_lo, c.train.window_hi}},
                 {"lr_inverse", c.train.lr_inverse},
                 {"lr_regressor", c.train.lr_regressor},
                 {"batch_size", c.train.batch_size},
                 {"fidelity_weight", c.train.fidelity_weight}}},
               {"bench",
                {{"train_sizes", c.train_sizes},
                 {"test_size", c.test_size},
                 {"reps", c.reps},
                 {"variant", to_string(c.variant)},
                 {"jobs", c.jobs},
                 {"random_labels", c.random_labels}}}};
  return j.dump(2) + "\n";
}

void write_effective_config(const RunConfig& config, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::ofstream out(out_dir / "effective_config.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + (out_dir / "effective_config.json").string());
  out << dump_run_config(config);
  if (!out) throw IoError("write failed: " + (out_dir / "effective_config.json").string());
}

}  // namespace pgnn
