#include "pgnn/metrics.hpp"

#include <cmath>

#include "pgnn/errors.hpp"

namespace pgnn {

Metrics compute_metrics(std::span<const double> preds, std::span<const double> targets) {
  if (preds.empty() || preds.size() != targets.size()) {
    throw DimensionError("metrics need equal, non-zero prediction and target counts");
  }
  const auto n = static_cast<double>(preds.size());
  double target_mean = 0.0;
  for (double t : targets) target_mean += t;
  target_mean /= n;

  double ss_res = 0.0;
  double ss_tot = 0.0;
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    const double d = targets[i] - target_mean;
    ss_tot += d * d;
  }
  Metrics m;
  m.rmse = std::sqrt(ss_res / n);
  m.mae = abs_sum / n;
  if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;

  if (preds.size() > 1) {
    double var = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double d = std::abs(preds[i] - targets[i]) - m.mae;
      var += d * d;
    }
    var /= n - 1.0;
    m.se = std::sqrt(var) / std::sqrt(n);
  }
  return m;
}

Metrics mean_metrics(std::span<const Metrics> rows) {
  Metrics out;
  if (rows.empty()) return out;
  double r2_sum = 0.0;
  int r2_count = 0;
  for (const auto& r : rows) {
    out.rmse += r.rmse;
    out.mae += r.mae;
    out.se += r.se;
    if (r.r2) {
      r2_sum += *r.r2;
      ++r2_count;
    }
  }
  const auto n = static_cast<double>(rows.size());
  out.rmse /= n;
  out.mae /= n;
  out.se /= n;
  if (r2_count > 0) out.r2 = r2_sum / r2_count;
  return out;
}

}  // namespace pgnn
