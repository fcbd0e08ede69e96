#pragma once

#include <optional>
#include <span>
#include <vector>

namespace pgnn {

/// Test-set regression metrics. `se` is the standard error of the absolute
/// errors: sample standard deviation of |pred - target| divided by sqrt(n).
/// `r2` is absent when the targets are constant.
struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;
  double se = 0.0;
};

/// Throws DimensionError on empty or unequal inputs.
Metrics compute_metrics(std::span<const double> preds, std::span<const double> targets);

/// Arithmetic mean of each metric; r2 averages the present values and is
/// absent when none are present.
Metrics mean_metrics(std::span<const Metrics> rows);

}  // namespace pgnn
