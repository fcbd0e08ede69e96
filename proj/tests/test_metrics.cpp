#include <cmath>

#include <gtest/gtest.h>

#include "pgnn/errors.hpp"
#include "pgnn/metrics.hpp"

namespace pgnn {
namespace {

struct Row {
  std::vector<double> preds;
  std::vector<double> targets;
  double rmse;
  double mae;
  std::optional<double> r2;
  double se;
};

// Values worked out by hand from the definitions.
const std::vector<Row>& fixture() {
  static const std::vector<Row> rows{
      {{0.2, 0.4, 0.9}, {0.2, 0.4, 0.9}, 0.0, 0.0, 1.0, 0.0},
      {{2.0, 2.0, 2.0}, {1.0, 2.0, 3.0}, std::sqrt(2.0 / 3.0), 2.0 / 3.0, 0.0, std::sqrt(1.0 / 3.0) / std::sqrt(3.0)},
      {{1.0, 2.0}, {1.0, 4.0}, std::sqrt(2.0), 1.0, 1.0 - 4.0 / 4.5, 1.0},
      {{0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, std::sqrt(14.0 / 3.0), 2.0, -6.0, 1.0 / std::sqrt(3.0)},
      {{0.5, 0.7}, {0.6, 0.6}, 0.1, 0.1, std::nullopt, 0.0},
  };
  return rows;
}

TEST(Metrics, FiveRowFixture) {
  for (std::size_t k = 0; k < fixture().size(); ++k) {
    const auto& row = fixture()[k];
    const auto m = compute_metrics(row.preds, row.targets);
    EXPECT_NEAR(m.rmse, row.rmse, 1e-9) << "row " << k;
    EXPECT_NEAR(m.mae, row.mae, 1e-9) << "row " << k;
    EXPECT_NEAR(m.se, row.se, 1e-9) << "row " << k;
    ASSERT_EQ(m.r2.has_value(), row.r2.has_value()) << "row " << k;
    if (row.r2) {
      EXPECT_NEAR(*m.r2, *row.r2, 1e-9) << "row " << k;
    }
  }
}

TEST(Metrics, InputErrors) {
  EXPECT_THROW(compute_metrics({}, {}), DimensionError);
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  EXPECT_THROW(compute_metrics(a, b), DimensionError);
}

TEST(Metrics, MeanOfRows) {
  Metrics a{1.0, 2.0, 0.5, 0.1};
  Metrics b{3.0, 4.0, std::nullopt, 0.3};
  Metrics c{2.0, 3.0, 0.7, 0.2};
  const std::vector<Metrics> rows{a, b, c};
  const auto m = mean_metrics(rows);
  EXPECT_DOUBLE_EQ(m.rmse, 2.0);
  EXPECT_DOUBLE_EQ(m.mae, 3.0);
  EXPECT_DOUBLE_EQ(*m.r2, 0.6);
  EXPECT_NEAR(m.se, 0.2, 1e-15);
  const std::vector<Metrics> none{b};
  EXPECT_FALSE(mean_metrics(none).r2.has_value());
}

}  // namespace
}  // namespace pgnn
