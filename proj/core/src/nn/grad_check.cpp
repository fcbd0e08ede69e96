#include "pgnn/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pgnn/errors.hpp"
#include "pgnn/random.hpp"

namespace pgnn::nn {

GradCheckResult grad_check(const std::function<double()>& loss, std::span<const GradTarget> targets,
                           const GradCheckOptions& options) {
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& t : targets) {
    if (t.values.size() != t.analytic.size()) {
      throw DimensionError("grad_check: target " + t.name + " has mismatched gradient length");
    }
    offsets.push_back(total);
    total += t.values.size();
  }

  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (total > static_cast<std::size_t>(options.max_coordinates)) {
    Rng rng(options.seed);
    std::vector<std::size_t> picked;
    std::sample(coords.begin(), coords.end(), std::back_inserter(picked),
                static_cast<std::size_t>(options.max_coordinates), rng);
    coords = std::move(picked);
  }

  GradCheckResult result;
  for (std::size_t flat : coords) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
    const auto which = static_cast<std::size_t>(std::distance(offsets.begin(), it) - 1);
    const auto& target = targets[which];
    const std::size_t idx = flat - offsets[which];

    const double saved = target.values[idx];
    target.values[idx] = saved + options.eps;
    const double up = loss();
    target.values[idx] = saved - options.eps;
    const double down = loss();
    target.values[idx] = saved;

    const double numeric = (up - down) / (2.0 * options.eps);
    const double analytic = target.analytic[idx];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), options.abs_floor});
    const double rel = std::abs(numeric - analytic) / denom;
    ++result.coordinates;
    if (rel > result.max_rel_error || std::isnan(rel)) {
      result.max_rel_error = std::isnan(rel) ? INFINITY : rel;
      result.worst_target = target.name;
      result.worst_index = idx;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

std::vector<GradTarget> param_targets(ParamStore<double>& store) {
  std::vector<GradTarget> targets;
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (!p.trainable) continue;
    targets.push_back({p.name, p.value.span(), p.grad.span()});
  }
  return targets;
}

}  // namespace pgnn::nn
