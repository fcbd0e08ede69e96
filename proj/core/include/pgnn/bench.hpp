#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pgnn/metrics.hpp"
#include "pgnn/models.hpp"
#include "pgnn/pipeline.hpp"
#include "pgnn/synth.hpp"

namespace pgnn {

struct BenchConfig {
  std::vector<int> train_sizes{15, 25, 50, 75, 100};
  int test_size = 150;
  int reps = 10;
  RegressorVariant variant = RegressorVariant::resnet_small;
  std::uint64_t base_seed = 0;
  GeneratorConfig generator;
  TrainConfig train;
  int jobs = 1;
  /// Replace every label with uniform noise on [0, 1] (null-experiment control).
  bool random_labels = false;

  void validate() const;
  int pool_size() const;
};

struct BenchRow {
  std::string model;  // "direct" or "pgnn"
  int train_size = 0;
  int rep = 0;
  Metrics metrics;

  friend bool operator==(const BenchRow& a, const BenchRow& b) {
    return a.model == b.model && a.train_size == b.train_size && a.rep == b.rep &&
           a.metrics.rmse == b.metrics.rmse && a.metrics.mae == b.metrics.mae && a.metrics.r2 == b.metrics.r2 &&
           a.metrics.se == b.metrics.se;
  }
};

struct MetricStats {
  double mean = 0.0;
  double std = 0.0;  // sample std over reps (n - 1); 0 for one rep
};

struct SummaryRow {
  std::string model;
  int train_size = 0;
  int reps = 0;
  MetricStats rmse;
  MetricStats mae;
  std::optional<MetricStats> r2;  // over reps with a defined r2
  MetricStats se;
};

struct BenchReport {
  std::vector<BenchRow> rows;  // ordered by (rep, train_size, model)
  /// SHA-256 of each rep's pool labels, in rep order.
  std::vector<std::string> pool_hashes;
};

/// Per-rep pool seed, distinct for every rep.
std::uint64_t rep_seed(std::uint64_t base_seed, int rep);

/// Pool = the first max(train_sizes) samples form the training portion, the
/// next test_size samples the test set. Each train size is a stratified draw
/// from the training portion (the whole portion at the largest size).
Split bench_split(std::span<const double> portion_labels, int train_size, std::uint64_t seed);

using BenchLog = std::function<void(const std::string&)>;

BenchReport run_monte_carlo(const BenchConfig& config, const BenchLog& log = {});

/// Throws ContractError on an empty report.
std::vector<SummaryRow> summarize(const BenchReport& report);

inline constexpr const char* kRowsHeader = "model,train_size,rep,rmse,mae,r2,se";

std::string format_rows_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_rows_csv(const std::string& text);
std::string format_summary_csv(const std::vector<SummaryRow>& summary);
std::string format_summary_table(const std::vector<SummaryRow>& summary);

/// Writes rows.csv, summary.csv, summary.json and learning_curve.csv.
/// Throws ContractError on an empty report before touching the directory.
void emit_report(const BenchReport& report, const std::filesystem::path& out_dir);

}  // namespace pgnn
