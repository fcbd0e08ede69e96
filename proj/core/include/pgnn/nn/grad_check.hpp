#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pgnn/nn/params.hpp"

namespace pgnn::nn {

/// A block of double-precision inputs and the analytic gradient of the loss
/// with respect to them.
struct GradTarget {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradCheckOptions {
  double eps = 1e-5;
  int max_coordinates = 200;
  std::uint64_t seed = 0;
  /// Denominator floor for the relative error, so vanishing gradients are
  /// compared in absolute terms.
  double abs_floor = 1e-8;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_target;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int coordinates = 0;
};

/// Central-difference check of analytic gradients on at most
/// `max_coordinates` coordinates sampled across all targets. `loss` must be a
/// pure function of the target values (no dropout, no state that changes the
/// output). Values are restored after each probe.
GradCheckResult grad_check(const std::function<double()>& loss, std::span<const GradTarget> targets,
                           const GradCheckOptions& options = {});

/// One target per trainable parameter of the store.
std::vector<GradTarget> param_targets(ParamStore<double>& store);

}  // namespace pgnn::nn
