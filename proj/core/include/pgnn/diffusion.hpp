#pragma once

#include <array>

#include "pgnn/field.hpp"
#include "pgnn/random.hpp"

namespace pgnn {

/// Closed interval used for scenario sampling.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Range&, const Range&) = default;
};

/// Which side of the unit square an edge value applies to. Rows run along u
/// (top is u = 0), columns along v (left is v = 0).
enum class Edge { top = 0, bottom = 1, left = 2, right = 3 };

/// One instance of Fick's second law on the unit square with constant
/// Dirichlet data on each edge and a uniform initial interior moisture.
struct DiffusionScenario {
  double diffusivity = 0.1;
  std::array<double, 4> edge_values{};  // indexed by Edge
  double initial_moisture = 0.8;
  double t_eval = 0.0;
  int modes = 32;

  double edge(Edge e) const { return edge_values[static_cast<int>(e)]; }
  void validate() const;

  friend bool operator==(const DiffusionScenario&, const DiffusionScenario&) = default;
};

struct ScenarioRanges {
  Range diffusivity{0.05, 0.2};
  Range edge{0.0, 0.3};
  Range initial_moisture{0.6, 1.0};
  Range t_eval{0.01, 0.5};
  int modes = 32;

  void validate() const;

  friend bool operator==(const ScenarioRanges&, const ScenarioRanges&) = default;
};

/// Draws every parameter uniformly and independently. Draw order is D, the
/// four edges (top, bottom, left, right), x0, t.
DiffusionScenario sample_scenario(Rng& rng, const ScenarioRanges& ranges);

/// Truncated separation-of-variables Laplace solution for the scenario's edge
/// values. Boundary pixels carry the Dirichlet data (corners average their two
/// edges). Clipped to [0, 1].
MoistureField steady_state(const DiffusionScenario& s, const GridSpec& grid);

/// Steady state plus the decaying double-sine transient of (x0 - steady),
/// evaluated at `t_eval`. Clipped to [0, 1].
MoistureField solve_fourier(const DiffusionScenario& s, const GridSpec& grid);

/// Same as solve_fourier but without the final clip; used to check the
/// maximum principle on the raw series.
MoistureField solve_fourier_unclipped(const DiffusionScenario& s, const GridSpec& grid);

/// Explicit forward-Euler heat stepping from the uniform initial state with
/// dt = 0.2 * min(h)^2 / D. Independent reference for solve_fourier.
MoistureField solve_fd_oracle(const DiffusionScenario& s, const GridSpec& grid);

}  // namespace pgnn
