#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "pgnn/diffusion.hpp"
#include "pgnn/errors.hpp"

namespace pgnn {
namespace {

const GridSpec kGrid{64, 64};

double sup_distance(const MoistureField& a, const MoistureField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

DiffusionScenario uniform_scenario(double b, double x0, double t) {
  DiffusionScenario s;
  s.diffusivity = 0.1;
  s.edge_values = {b, b, b, b};
  s.initial_moisture = x0;
  s.t_eval = t;
  return s;
}

TEST(Scenario, DegenerateRangesReturnThoseValues) {
  ScenarioRanges r;
  r.diffusivity = {0.11, 0.11};
  r.edge = {0.2, 0.2};
  r.initial_moisture = {0.7, 0.7};
  r.t_eval = {0.3, 0.3};
  r.modes = 5;
  Rng rng(1);
  const auto s = sample_scenario(rng, r);
  EXPECT_EQ(s.diffusivity, 0.11);
  for (double b : s.edge_values) EXPECT_EQ(b, 0.2);
  EXPECT_EQ(s.initial_moisture, 0.7);
  EXPECT_EQ(s.t_eval, 0.3);
  EXPECT_EQ(s.modes, 5);
}

TEST(Scenario, SameSeedSameScenario) {
  Rng a(7);
  Rng b(7);
  EXPECT_EQ(sample_scenario(a, {}), sample_scenario(b, {}));
}

TEST(Scenario, DiffusivityMeanMatchesRange) {
  Rng rng(2024);
  double sum = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const auto s = sample_scenario(rng, {});
    ASSERT_GE(s.diffusivity, 0.05);
    ASSERT_LE(s.diffusivity, 0.2);
    sum += s.diffusivity;
  }
  EXPECT_NEAR(sum / n, 0.125, 0.005);
}

TEST(Scenario, Validation) {
  DiffusionScenario s;
  s.diffusivity = 0.0;
  EXPECT_THROW(s.validate(), ParameterError);
  s = {};
  s.modes = 0;
  EXPECT_THROW(steady_state(s, kGrid), ParameterError);
  s = {};
  s.t_eval = -1.0;
  EXPECT_THROW(solve_fourier(s, kGrid), ParameterError);
  ScenarioRanges r;
  r.edge = {0.3, 0.1};
  EXPECT_THROW(r.validate(), ParameterError);
}

TEST(SteadyState, ZeroEdgesGiveZeroField) {
  const auto f = steady_state(uniform_scenario(0.0, 0.5, 0.0), kGrid);
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
}

TEST(SteadyState, EqualEdgesGiveConstantField) {
  for (int k : {1, 3, 32}) {
    auto s = uniform_scenario(0.25, 0.25, 0.0);
    s.modes = k;
    const auto f = steady_state(s, kGrid);
    for (double v : f.values()) EXPECT_NEAR(v, 0.25, 1e-12);
  }
}

TEST(SteadyState, InteriorIsDiscretelyHarmonic) {
  // The series is harmonic in the continuum; on the lattice its 5-point
  // Laplacian in pixel units stays tiny away from the corner singularities.
  Rng rng(mix_seed(5, 0));
  for (int trial = 0; trial < 5; ++trial) {
    const auto s = sample_scenario(rng, {});
    const auto lap = laplacian5(steady_state(s, kGrid), true);
    double sq = 0.0;
    int count = 0;
    for (int i = 2; i < kGrid.height - 2; ++i) {
      for (int j = 2; j < kGrid.width - 2; ++j) {
        sq += lap(i, j) * lap(i, j);
        ++count;
      }
    }
    EXPECT_LE(std::sqrt(sq / count), 1e-3) << "trial " << trial;
  }
}

TEST(SteadyState, BoundaryCarriesEdgeValues) {
  DiffusionScenario s;
  s.edge_values = {0.1, 0.2, 0.3, 0.05};
  const auto f = steady_state(s, kGrid);
  EXPECT_DOUBLE_EQ(f(0, 10), 0.1);
  EXPECT_DOUBLE_EQ(f(63, 10), 0.2);
  EXPECT_DOUBLE_EQ(f(10, 0), 0.3);
  EXPECT_DOUBLE_EQ(f(10, 63), 0.05);
  EXPECT_DOUBLE_EQ(f(0, 0), 0.2);
}

TEST(Fourier, ConstantScenarioIsExactAtAllTimes) {
  for (double t : {0.0, 0.01, 0.3, 5.0}) {
    const auto s = uniform_scenario(0.3, 0.3, t);
    const auto fourier = solve_fourier(s, kGrid);
    const auto fd = solve_fd_oracle(s, kGrid);
    for (double v : fourier.values()) EXPECT_NEAR(v, 0.3, 1e-12);
    for (double v : fd.values()) EXPECT_NEAR(v, 0.3, 1e-12);
  }
}

TEST(Fourier, TransientVanishesAtLongTimes) {
  DiffusionScenario s;
  s.diffusivity = 0.1;
  s.edge_values = {0.05, 0.2, 0.1, 0.3};
  s.initial_moisture = 0.9;
  s.t_eval = 50.0;
  EXPECT_LE(sup_distance(solve_fourier(s, kGrid), steady_state(s, kGrid)), 1e-6);
}

TEST(Fourier, MatchesFiniteDifferenceOnReferenceScenario) {
  const auto s = uniform_scenario(0.1, 0.8, 0.05);
  EXPECT_LE(sup_distance(solve_fourier(s, kGrid), solve_fd_oracle(s, kGrid)), 2e-2);
}

TEST(Fourier, MaximumPrincipleWithTruncationSlack) {
  Rng rng(mix_seed(9, 1));
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = sample_scenario(rng, {});
    double lo = s.initial_moisture;
    double hi = s.initial_moisture;
    for (double b : s.edge_values) {
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    const auto f = solve_fourier_unclipped(s, kGrid);
    for (double v : f.values()) {
      ASSERT_GE(v, lo - 0.05) << "trial " << trial;
      ASSERT_LE(v, hi + 0.05) << "trial " << trial;
    }
  }
}

TEST(Fourier, IntegralDecaysWhenInteriorStartsAboveEdges) {
  Rng rng(mix_seed(10, 2));
  for (int trial = 0; trial < 5; ++trial) {
    auto s = sample_scenario(rng, {});
    double prev = 2.0;
    for (double t : {0.01, 0.05, 0.1, 0.2, 0.5}) {
      s.t_eval = t;
      const double q = integrate(solve_fourier(s, kGrid));
      EXPECT_LE(q, prev + 1e-12) << "trial " << trial << " t " << t;
      prev = q;
    }
  }
}

TEST(FdOracle, InitialStateAtTimeZero) {
  DiffusionScenario s;
  s.edge_values = {0.1, 0.2, 0.3, 0.0};
  s.initial_moisture = 0.7;
  s.t_eval = 0.0;
  const auto f = solve_fd_oracle(s, kGrid);
  EXPECT_EQ(f(5, 5), 0.7);
  EXPECT_EQ(f(0, 5), 0.1);
  EXPECT_EQ(f(63, 5), 0.2);
  EXPECT_EQ(f(5, 0), 0.3);
  EXPECT_EQ(f(5, 63), 0.0);
}

TEST(FdOracle, LongRunReachesSteadyState) {
  DiffusionScenario s;
  s.diffusivity = 0.1;
  s.edge_values = {0.1, 0.1, 0.1, 0.1};
  s.initial_moisture = 0.8;
  s.t_eval = 50.0;
  EXPECT_LE(sup_distance(solve_fd_oracle(s, kGrid), steady_state(s, kGrid)), 1e-4);

  // Mixed edges: the stepper has settled on its own fixed point.
  s.edge_values = {0.0, 0.3, 0.1, 0.2};
  auto later = s;
  later.t_eval = 60.0;
  EXPECT_LE(sup_distance(solve_fd_oracle(s, kGrid), solve_fd_oracle(later, kGrid)), 1e-4);
}

}  // namespace
}  // namespace pgnn
