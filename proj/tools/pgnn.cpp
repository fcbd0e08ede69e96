// pgnn command-line entry point: gen, train, bench, verify.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pgnn/bench.hpp"
#include "pgnn/config.hpp"
#include "pgnn/errors.hpp"
#include "pgnn/models.hpp"
#include "pgnn/pipeline.hpp"
#include "pgnn/synth.hpp"
#include "pgnn/verify.hpp"

namespace fs = std::filesystem;
using namespace pgnn;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kIo = 3, kData = 4 };

// Raised for bad flag combinations discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config_path;
};

struct TrainFlags {
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr_inverse;
  std::optional<double> lr_regressor;
  std::optional<double> fidelity_weight;
  std::optional<std::string> variant;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Base seed (overrides the config file)");
  cmd->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--batch-size", f.batch_size, "Minibatch size");
  cmd->add_option("--lr-inverse", f.lr_inverse, "Learning rate of the inverse network");
  cmd->add_option("--lr-regressor", f.lr_regressor, "Learning rate of the regressor");
  cmd->add_option("--fidelity-weight", f.fidelity_weight, "Weight of the grayscale fidelity term");
  cmd->add_option("--variant", f.variant, "Regressor backbone: resnet18 or resnet-small");
}

// Precedence: flags > config file > defaults.
RunConfig resolve(const Common& c, const TrainFlags* f = nullptr) {
  RunConfig cfg;
  if (!c.config_path.empty()) {
    try {
      cfg = load_run_config(c.config_path);
    } catch (const FormatError& e) {
      throw UsageError(std::string("config ") + c.config_path + ": " + e.what());
    }
  }
  if (c.seed) cfg.seed = *c.seed;
  if (f) {
    if (f->epochs) {
      cfg.train.epochs = *f->epochs;
      // Shrink the window with the run so short runs stay valid.
      cfg.train.window_hi = std::min(cfg.train.window_hi, cfg.train.epochs);
      cfg.train.window_lo = std::min(cfg.train.window_lo, cfg.train.window_hi);
    }
    if (f->batch_size) cfg.train.batch_size = *f->batch_size;
    if (f->lr_inverse) cfg.train.lr_inverse = *f->lr_inverse;
    if (f->lr_regressor) cfg.train.lr_regressor = *f->lr_regressor;
    if (f->fidelity_weight) cfg.train.fidelity_weight = *f->fidelity_weight;
    if (f->variant) cfg.variant = parse_variant(*f->variant);
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string metrics_row(const std::string& epoch, const std::string& split, const Metrics& m) {
  return epoch + "," + split + "," + g9(m.rmse) + "," + g9(m.mae) + "," + (m.r2 ? g9(*m.r2) : std::string()) + "," +
         g9(m.se) + "\n";
}

// ---- gen ----

struct GenArgs {
  Common common;
  std::string out;
  int n = 0;
  bool save_fields = false;
};

int run_gen(const GenArgs& a) {
  RunConfig cfg = resolve(a.common);
  cfg.generator.save_fields = a.save_fields;
  cfg.generator.validate();
  if (a.n < 0) throw UsageError("--n must be >= 0");
  generate_dataset(cfg.generator, cfg.seed, a.n, a.out);
  write_effective_config(cfg, a.out);
  std::cout << manifest_hash(a.out) << "\n";
  return kOk;
}

// ---- train ----

struct TrainArgs {
  Common common;
  TrainFlags flags;
  std::string mode;
  std::string data;
  std::string out;
  std::string model_out;
  std::string inverse_model;
  std::optional<int> train_size;
};

struct Data {
  nn::Tensor<float> train_z, test_z;
  std::vector<double> train_y, test_y;
  std::vector<const MoistureField*> test_fields;
};

Data load_split(const std::string& dir, std::optional<int> train_size, std::uint64_t seed,
                std::vector<SampleRecord>& records) {
  records = load_dataset(dir);
  const int n = static_cast<int>(records.size());
  if (n < 2) throw DimensionError("training needs a dataset with at least 2 samples, found " + std::to_string(n));
  const int size = train_size.value_or(std::max(1, n - std::max(1, n / 5)));
  if (size < 1 || size >= n) {
    throw UsageError("--train-size must lie in [1, " + std::to_string(n - 1) + "] for this dataset");
  }
  std::vector<double> labels;
  for (const auto& r : records) labels.push_back(r.y_noisy);
  const Split split = stratified_split(labels, size, mix_seed(seed, 1));

  Data d;
  std::vector<const RgbImage*> tr, te;
  for (int i : split.train) {
    tr.push_back(&records[static_cast<std::size_t>(i)].image);
    d.train_y.push_back(labels[static_cast<std::size_t>(i)]);
  }
  for (int i : split.test) {
    te.push_back(&records[static_cast<std::size_t>(i)].image);
    d.test_y.push_back(labels[static_cast<std::size_t>(i)]);
    const auto& f = records[static_cast<std::size_t>(i)].true_field;
    d.test_fields.push_back(f ? &*f : nullptr);
  }
  d.train_z = images_to_tensor(std::span<const RgbImage* const>(tr));
  d.test_z = images_to_tensor(std::span<const RgbImage* const>(te));
  return d;
}

void write_regressor_outputs(const RegressorTrainResult& r, const fs::path& out, const fs::path& model_path,
                             const TrainConfig& tc) {
  save_model(r.model, model_path);
  std::string csv = "epoch,split,rmse,mae,r2,se\n";
  for (const auto& e : r.window_trace) csv += metrics_row(std::to_string(e.epoch), "test", e.test);
  csv += metrics_row(std::to_string(tc.window_lo) + "-" + std::to_string(tc.window_hi), "test_window_mean", r.windowed);
  write_text(out / "metrics.csv", csv);
  std::string loss = "epoch,loss\n";
  for (std::size_t e = 0; e < r.train_loss.size(); ++e) loss += std::to_string(e + 1) + "," + g9(r.train_loss[e]) + "\n";
  write_text(out / "train_loss.csv", loss);
  std::cout << "window mean (epochs " << tc.window_lo << "-" << tc.window_hi << "): rmse " << g9(r.windowed.rmse)
            << " mae " << g9(r.windowed.mae) << " r2 " << (r.windowed.r2 ? g9(*r.windowed.r2) : "n/a") << " se "
            << g9(r.windowed.se) << "\n";
}

int run_train(const TrainArgs& a) {
  if (a.mode == "inverse-stage2" && a.inverse_model.empty()) {
    throw UsageError("--mode inverse-stage2 requires --inverse-model PATH (a stage-1 model file)");
  }
  const RunConfig cfg = resolve(a.common, &a.flags);
  cfg.train.validate();
  const fs::path out = a.out;
  const fs::path model_path = a.model_out.empty() ? out / "model.pgnn" : fs::path(a.model_out);

  std::optional<InverseNet<float>> stage1;
  if (!a.inverse_model.empty()) stage1.emplace(load_inverse_net(a.inverse_model));

  std::vector<SampleRecord> records;
  const Data d = load_split(a.data, a.train_size, cfg.seed, records);
  write_effective_config(cfg, out);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());

  RegressorConfig rc;
  rc.variant = cfg.variant;
  if (a.mode == "direct") {
    auto r = train_regressor(d.train_z, d.train_y, d.test_z, d.test_y, cfg.train, rc);
    write_regressor_outputs(r, out, model_path, cfg.train);
  } else if (a.mode == "inverse-stage1") {
    auto r = train_inverse(d.train_z, cfg.train);
    save_model(r.model, model_path);
    std::string trace = "epoch,loss\n";
    for (std::size_t e = 0; e < r.loss_trace.size(); ++e) trace += std::to_string(e + 1) + "," + g9(r.loss_trace[e]) + "\n";
    write_text(out / "loss_trace.csv", trace);
    const nn::Tensor<float> x_hat = apply_inverse(r.model, d.test_z);
    std::cout << "final physics loss " << g9(r.loss_trace.back()) << "\n";
    std::cout << "held-out physics loss " << g9(physics_loss(x_hat)) << " (identity mapping "
              << g9(physics_loss(d.test_z)) << ")\n";
    // Field error on held-out samples where the dataset stores ground truth.
    double sq = 0.0;
    std::size_t count = 0;
    const auto plane = x_hat.shape().plane();
    for (std::size_t k = 0; k < d.test_fields.size(); ++k) {
      if (!d.test_fields[k]) continue;
      const auto truth = d.test_fields[k]->values();
      for (int c = 0; c < x_hat.shape().c; ++c) {
        const float* p = x_hat.sample_ptr(static_cast<int>(k)) + c * plane;
        for (std::size_t q = 0; q < plane; ++q) {
          sq += (p[q] - truth[q]) * (p[q] - truth[q]);
          ++count;
        }
      }
    }
    if (count > 0) std::cout << "held-out field mse " << g9(sq / static_cast<double>(count)) << "\n";
  } else {
    auto& inv = *stage1;
    const nn::Tensor<float> x_train = apply_inverse(inv, d.train_z);
    const nn::Tensor<float> x_test = apply_inverse(inv, d.test_z);
    auto r = train_regressor(x_train, d.train_y, x_test, d.test_y, cfg.train, rc);
    write_regressor_outputs(r, out, model_path, cfg.train);
  }
  std::cout << "model written to " << model_path.string() << "\n";
  return kOk;
}

// ---- bench ----

struct BenchArgs {
  Common common;
  TrainFlags flags;
  std::vector<int> train_sizes;
  std::optional<int> reps;
  std::optional<int> test_size;
  std::optional<int> jobs;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  RunConfig cfg = resolve(a.common, &a.flags);
  if (!a.train_sizes.empty()) cfg.train_sizes = a.train_sizes;
  if (a.reps) cfg.reps = *a.reps;
  if (a.test_size) cfg.test_size = *a.test_size;
  if (a.jobs) cfg.jobs = *a.jobs;
  cfg.validate();
  write_effective_config(cfg, a.out);
  const BenchReport report = run_monte_carlo(cfg.bench_config(), [](const std::string& line) {
    std::cerr << line << std::endl;
  });
  emit_report(report, a.out);
  std::cout << format_summary_table(summarize(report));
  return kOk;
}

// ---- verify ----

int run_verify(const std::string& fault) {
  VerifyOptions opt;
  opt.inject_fault = fault;
  const auto checks = run_verification(opt);
  std::vector<std::string> failed;
  for (const auto& c : checks) {
    std::printf("%-4s %-28s %.3g <= %.3g  %s\n", c.passed ? "ok" : "FAIL", c.name.c_str(), c.value, c.tolerance,
                c.detail.c_str());
    if (!c.passed) failed.push_back(c.name);
  }
  if (failed.empty()) {
    std::printf("all %zu checks passed\n", checks.size());
    return kOk;
  }
  std::string names;
  for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
  std::printf("verification failed: %s\n", names.c_str());
  return kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-guided inverse regression on synthetic moisture images"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic dataset");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--out", gen.out, "Dataset directory")->required();
  gen_cmd->add_option("--n", gen.n, "Number of samples")->required();
  gen_cmd->add_flag("--save-fields", gen.save_fields, "Also store the clean moisture fields");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one model on a dataset");
  add_common(train_cmd, train.common);
  add_train_flags(train_cmd, train.flags);
  train_cmd->add_option("--mode", train.mode, "direct | inverse-stage1 | inverse-stage2")
      ->required()
      ->check(CLI::IsMember({"direct", "inverse-stage1", "inverse-stage2"}));
  train_cmd->add_option("--data", train.data, "Dataset directory")->required();
  train_cmd->add_option("--out", train.out, "Output directory")->required();
  train_cmd->add_option("--model-out", train.model_out, "Model file (default <out>/model.pgnn)");
  train_cmd->add_option("--inverse-model", train.inverse_model, "Stage-1 model file (inverse-stage2)");
  train_cmd->add_option("--train-size", train.train_size, "Training samples (default: 80% of the dataset)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Monte Carlo comparison of direct and inverse prediction");
  add_common(bench_cmd, bench.common);
  add_train_flags(bench_cmd, bench.flags);
  bench_cmd->add_option("--train-sizes", bench.train_sizes, "Training set sizes")->delimiter(',');
  bench_cmd->add_option("--reps", bench.reps, "Monte Carlo repetitions");
  bench_cmd->add_option("--test-size", bench.test_size, "Test samples per repetition");
  bench_cmd->add_option("--jobs", bench.jobs, "Parallel (rep, size) cells");
  bench_cmd->add_option("--out", bench.out, "Report directory")->required();

  Common verify_common;
  std::string fault;
  auto* verify_cmd = app.add_subcommand("verify", "Run the built-in verification suite");
  add_common(verify_cmd, verify_common);
  verify_cmd->add_option("--inject-fault", fault, "Corrupt the analytic gradient of one operation (self-test)")
      ->check(CLI::IsMember(fault_targets()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*train_cmd) return run_train(train);
    if (*bench_cmd) return run_bench(bench);
    if (*verify_cmd) return run_verify(fault);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
