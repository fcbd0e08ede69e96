#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "json.hpp"
#include "pgnn/bench.hpp"
#include "pgnn/errors.hpp"
#include "test_util.hpp"

namespace pgnn {
namespace {

namespace fs = std::filesystem;

BenchConfig tiny_config() {
  BenchConfig c;
  c.generator.grid = {16, 16};
  c.generator.noise.circle_radius = {1, 3};
  c.train_sizes = {6};
  c.test_size = 8;
  c.reps = 1;
  c.base_seed = 5;
  c.train.epochs = 3;
  c.train.window_lo = 2;
  c.train.window_hi = 3;
  c.train.batch_size = 4;
  return c;
}

BenchRow row(const std::string& model, int size, int rep, double rmse, double mae, std::optional<double> r2,
             double se) {
  return {model, size, rep, Metrics{rmse, mae, r2, se}};
}

TEST(Bench, OneRepOneSizeGivesTwoRows) {
  const auto report = run_monte_carlo(tiny_config());
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].model, "direct");
  EXPECT_EQ(report.rows[1].model, "pgnn");
  EXPECT_EQ(report.rows[0].train_size, 6);
  EXPECT_EQ(report.pool_hashes.size(), 1u);
  for (const auto& r : report.rows) EXPECT_TRUE(std::isfinite(r.metrics.rmse));
}

TEST(Bench, RowCountOrderAndDeterminism) {
  auto cfg = tiny_config();
  cfg.train_sizes = {6, 4};
  cfg.reps = 2;
  cfg.jobs = 2;
  const auto a = run_monte_carlo(cfg);
  ASSERT_EQ(a.rows.size(), 2u * 2u * 2u);
  EXPECT_EQ(a.rows[0].rep, 0);
  EXPECT_EQ(a.rows[0].train_size, 4);
  EXPECT_EQ(a.rows[2].train_size, 6);
  EXPECT_EQ(a.rows[4].rep, 1);
  // Pools are fresh per rep.
  EXPECT_NE(a.pool_hashes[0], a.pool_hashes[1]);

  cfg.jobs = 1;
  const auto b = run_monte_carlo(cfg);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(format_rows_csv(a.rows), format_rows_csv(b.rows));
  EXPECT_EQ(a.pool_hashes, b.pool_hashes);
}

TEST(Bench, RepSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (int r = 0; r < 100; ++r) seeds.insert(rep_seed(42, r));
  EXPECT_EQ(seeds.size(), 100u);
}

TEST(Bench, SplitStaysInsideTrainingPortion) {
  std::vector<double> portion(30);
  for (int i = 0; i < 30; ++i) portion[i] = 0.03 * i;
  for (int size : {5, 15, 29}) {
    const auto split = bench_split(portion, size, 7);
    EXPECT_EQ(split.train.size(), static_cast<std::size_t>(size));
    for (int i : split.train) {
      EXPECT_GE(i, 0);
      EXPECT_LT(i, 30);
    }
  }
  const auto full = bench_split(portion, 30, 7);
  EXPECT_EQ(full.train.size(), 30u);
  EXPECT_TRUE(full.test.empty());
}

TEST(Bench, ConfigValidation) {
  auto c = tiny_config();
  c.train_sizes = {};
  EXPECT_THROW(c.validate(), ParameterError);
  c = tiny_config();
  c.train_sizes = {5, 5};
  EXPECT_THROW(c.validate(), ParameterError);
  c = tiny_config();
  c.reps = 0;
  EXPECT_THROW(c.validate(), ParameterError);
  c = tiny_config();
  c.train_sizes = {6, 10};
  EXPECT_EQ(c.pool_size(), 18);
}

TEST(Bench, NullExperimentHasNoSkill) {
  auto cfg = tiny_config();
  cfg.random_labels = true;
  cfg.train_sizes = {12};
  cfg.test_size = 30;
  cfg.reps = 3;
  cfg.train.epochs = 6;
  cfg.train.window_lo = 3;
  cfg.train.window_hi = 6;
  const auto summary = summarize(run_monte_carlo(cfg));
  ASSERT_EQ(summary.size(), 2u);
  for (const auto& s : summary) {
    ASSERT_TRUE(s.r2.has_value());
    EXPECT_LE(s.r2->mean, 0.1) << s.model;
  }
}

TEST(Summary, HandComputedFixture) {
  BenchReport report;
  report.rows = {row("direct", 15, 0, 0.1, 0.08, 0.5, 0.01), row("direct", 15, 1, 0.2, 0.10, 0.7, 0.03),
                 row("direct", 15, 2, 0.3, 0.12, std::nullopt, 0.02)};
  const auto s = summarize(report);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].reps, 3);
  EXPECT_NEAR(s[0].rmse.mean, 0.2, 1e-12);
  EXPECT_NEAR(s[0].rmse.std, 0.1, 1e-12);
  EXPECT_NEAR(s[0].mae.mean, 0.10, 1e-12);
  EXPECT_NEAR(s[0].mae.std, 0.02, 1e-12);
  ASSERT_TRUE(s[0].r2.has_value());
  EXPECT_NEAR(s[0].r2->mean, 0.6, 1e-12);
  EXPECT_NEAR(s[0].r2->std, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(s[0].se.mean, 0.02, 1e-12);
}

TEST(Summary, SingleRepAndIdenticalRows) {
  BenchReport one;
  one.rows = {row("pgnn", 30, 0, 0.5, 0.4, 0.2, 0.05)};
  const auto s = summarize(one);
  EXPECT_EQ(s[0].rmse.std, 0.0);
  EXPECT_EQ(s[0].rmse.mean, 0.5);

  BenchReport same;
  same.rows = {row("pgnn", 30, 0, 0.5, 0.4, 0.2, 0.05), row("pgnn", 30, 1, 0.5, 0.4, 0.2, 0.05)};
  const auto t = summarize(same);
  EXPECT_DOUBLE_EQ(t[0].mae.mean, 0.4);
  EXPECT_DOUBLE_EQ(t[0].r2->mean, 0.2);
  EXPECT_THROW(summarize(BenchReport{}), ContractError);
}

TEST(Report, RowsCsvRoundTrip) {
  const std::vector<BenchRow> rows{row("direct", 15, 0, 0.123456789, 0.1, -0.25, 0.001),
                                   row("pgnn", 15, 0, 0.2, 0.15, std::nullopt, 0.002)};
  const auto csv = format_rows_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,train_size,rep,rmse,mae,r2,se");
  EXPECT_NE(csv.find("pgnn,15,0,0.2,0.15,,0.002"), std::string::npos);
  EXPECT_EQ(parse_rows_csv(csv), rows);
  EXPECT_THROW(parse_rows_csv("bad header\n"), FormatError);
}

TEST(Report, EmitWritesAllFiles) {
  testing::TempDir dir;
  BenchReport report;
  report.rows = {row("direct", 15, 0, 0.1, 0.08, 0.5, 0.01), row("pgnn", 15, 0, 0.09, 0.07, 0.6, 0.01)};
  report.pool_hashes = {"abc"};
  emit_report(report, dir / "out");
  EXPECT_EQ(parse_rows_csv(testing::slurp(dir / "out/rows.csv")), report.rows);
  EXPECT_TRUE(fs::exists(dir / "out/summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "out/learning_curve.csv"));
  const auto j = nlohmann::json::parse(testing::slurp(dir / "out/summary.json"));
  EXPECT_TRUE(j.is_object());
  const auto curve = testing::slurp(dir / "out/learning_curve.csv");
  EXPECT_EQ(curve.substr(0, curve.find('\n')), "train_size,direct_rmse,direct_r2,pgnn_rmse,pgnn_r2");
}

TEST(Report, EmptyReportWritesNothing) {
  testing::TempDir dir;
  EXPECT_THROW(emit_report(BenchReport{}, dir / "out"), ContractError);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

}  // namespace
}  // namespace pgnn
