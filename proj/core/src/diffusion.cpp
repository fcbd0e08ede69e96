#include "pgnn/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pgnn/errors.hpp"

namespace pgnn {

namespace {

constexpr double kPi = std::numbers::pi;

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi)) throw ParameterError(std::string("range ") + name + " has lo > hi");
}

// sinh(a r) / sinh(a) for a > 0, r in [0, 1], without overflow.
double sinh_ratio(double a, double r) {
  if (r <= 0.0) return 0.0;
  return std::exp(a * (r - 1.0)) * (-std::expm1(-2.0 * a * r)) / (-std::expm1(-2.0 * a));
}

// Row-major (modes x points) table of sin(m pi s_i), m = 1..modes.
std::vector<double> sine_table(int modes, int points) {
  std::vector<double> t(static_cast<std::size_t>(modes) * points);
  for (int m = 1; m <= modes; ++m) {
    for (int i = 0; i < points; ++i) {
      t[static_cast<std::size_t>(m - 1) * points + i] = std::sin(m * kPi * i / (points - 1));
    }
  }
  return t;
}

void apply_boundary(MoistureField& f, const DiffusionScenario& s) {
  const int n = f.height();
  const int m = f.width();
  for (int j = 0; j < m; ++j) {
    f(0, j) = s.edge(Edge::top);
    f(n - 1, j) = s.edge(Edge::bottom);
  }
  for (int i = 0; i < n; ++i) {
    f(i, 0) = s.edge(Edge::left);
    f(i, m - 1) = s.edge(Edge::right);
  }
  f(0, 0) = 0.5 * (s.edge(Edge::top) + s.edge(Edge::left));
  f(0, m - 1) = 0.5 * (s.edge(Edge::top) + s.edge(Edge::right));
  f(n - 1, 0) = 0.5 * (s.edge(Edge::bottom) + s.edge(Edge::left));
  f(n - 1, m - 1) = 0.5 * (s.edge(Edge::bottom) + s.edge(Edge::right));
}

MoistureField steady_unclipped(const DiffusionScenario& s, const GridSpec& grid) {
  const int n = grid.height;
  const int m = grid.width;
  const int k = s.modes;
  const auto sin_u = sine_table(k, n);
  const auto sin_v = sine_table(k, m);

  // Expand only the deviations from the mean edge value; the constant part is
  // harmonic on its own, so constant data is reproduced exactly.
  const double base = 0.25 * (s.edge(Edge::top) + s.edge(Edge::bottom) + s.edge(Edge::left) + s.edge(Edge::right));
  const double b_top = s.edge(Edge::top) - base;
  const double b_bottom = s.edge(Edge::bottom) - base;
  const double b_left = s.edge(Edge::left) - base;
  const double b_right = s.edge(Edge::right) - base;

  MoistureField f(grid, base);
  for (int mode = 1; mode <= k; ++mode) {
    if (mode % 2 == 0) continue;  // c_m vanishes for even m
    const double a = mode * kPi;
    const double unit = 4.0 / a;  // c_m / b for odd m
    const double* su = &sin_u[static_cast<std::size_t>(mode - 1) * n];
    const double* sv = &sin_v[static_cast<std::size_t>(mode - 1) * m];
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / (n - 1);
      const double top = b_top * unit * sinh_ratio(a, 1.0 - u);
      const double bottom = b_bottom * unit * sinh_ratio(a, u);
      for (int j = 0; j < m; ++j) {
        const double v = static_cast<double>(j) / (m - 1);
        const double left = b_left * unit * sinh_ratio(a, 1.0 - v);
        const double right = b_right * unit * sinh_ratio(a, v);
        f(i, j) += (top + bottom) * sv[j] + (left + right) * su[i];
      }
    }
  }
  apply_boundary(f, s);
  return f;
}

}  // namespace

void DiffusionScenario::validate() const {
  if (!(diffusivity > 0.0)) throw ParameterError("diffusion coefficient must be positive");
  if (modes < 1) throw ParameterError("Fourier truncation must be at least 1 mode");
  if (!(t_eval >= 0.0)) throw ParameterError("evaluation time must be non-negative");
  for (double b : edge_values) {
    if (!(b >= 0.0 && b <= 1.0)) throw ParameterError("edge values must lie in [0, 1]");
  }
  if (!(initial_moisture >= 0.0 && initial_moisture <= 1.0)) {
    throw ParameterError("initial moisture must lie in [0, 1]");
  }
}

void ScenarioRanges::validate() const {
  check_range(diffusivity, "diffusivity");
  check_range(edge, "edge");
  check_range(initial_moisture, "initial_moisture");
  check_range(t_eval, "t_eval");
  if (modes < 1) throw ParameterError("Fourier truncation must be at least 1 mode");
}

DiffusionScenario sample_scenario(Rng& rng, const ScenarioRanges& ranges) {
  DiffusionScenario s;
  s.diffusivity = uniform(rng, ranges.diffusivity.lo, ranges.diffusivity.hi);
  for (double& b : s.edge_values) b = uniform(rng, ranges.edge.lo, ranges.edge.hi);
  s.initial_moisture = uniform(rng, ranges.initial_moisture.lo, ranges.initial_moisture.hi);
  s.t_eval = uniform(rng, ranges.t_eval.lo, ranges.t_eval.hi);
  s.modes = ranges.modes;
  return s;
}

MoistureField steady_state(const DiffusionScenario& s, const GridSpec& grid) {
  if (s.modes < 1) throw ParameterError("Fourier truncation must be at least 1 mode");
  validate_grid(grid);
  auto f = steady_unclipped(s, grid);
  f.clip(0.0, 1.0);
  return f;
}

MoistureField solve_fourier_unclipped(const DiffusionScenario& s, const GridSpec& grid) {
  s.validate();
  validate_grid(grid);
  const int n = grid.height;
  const int m = grid.width;
  const int k = s.modes;

  MoistureField f = steady_unclipped(s, grid);

  // Discrete double sine transform of the interior residual x0 - steady.
  const auto sin_u = sine_table(k, n);
  const auto sin_v = sine_table(k, m);
  std::vector<double> residual(grid.count(), 0.0);
  for (int i = 1; i < n - 1; ++i) {
    for (int j = 1; j < m - 1; ++j) {
      residual[static_cast<std::size_t>(i) * m + j] = s.initial_moisture - f(i, j);
    }
  }
  // partial[p][j] = sum_i sin(p pi u_i) residual[i][j]
  std::vector<double> partial(static_cast<std::size_t>(k) * m, 0.0);
  for (int p = 0; p < k; ++p) {
    for (int i = 1; i < n - 1; ++i) {
      const double w = sin_u[static_cast<std::size_t>(p) * n + i];
      for (int j = 1; j < m - 1; ++j) {
        partial[static_cast<std::size_t>(p) * m + j] += w * residual[static_cast<std::size_t>(i) * m + j];
      }
    }
  }
  const double norm = (2.0 / (n - 1)) * (2.0 / (m - 1));
  std::vector<double> coeff(static_cast<std::size_t>(k) * k, 0.0);
  for (int p = 0; p < k; ++p) {
    for (int q = 0; q < k; ++q) {
      double acc = 0.0;
      for (int j = 1; j < m - 1; ++j) {
        acc += partial[static_cast<std::size_t>(p) * m + j] * sin_v[static_cast<std::size_t>(q) * m + j];
      }
      const double mm = p + 1;
      const double nn = q + 1;
      const double decay = std::exp(-s.diffusivity * kPi * kPi * (mm * mm + nn * nn) * s.t_eval);
      coeff[static_cast<std::size_t>(p) * k + q] = norm * acc * decay;
    }
  }

  // Synthesis: transient[i][j] = sum_p sin_u[p][i] sum_q coeff[p][q] sin_v[q][j]
  std::vector<double> row(static_cast<std::size_t>(k) * m, 0.0);
  for (int p = 0; p < k; ++p) {
    for (int q = 0; q < k; ++q) {
      const double c = coeff[static_cast<std::size_t>(p) * k + q];
      if (c == 0.0) continue;
      for (int j = 1; j < m - 1; ++j) {
        row[static_cast<std::size_t>(p) * m + j] += c * sin_v[static_cast<std::size_t>(q) * m + j];
      }
    }
  }
  for (int i = 1; i < n - 1; ++i) {
    for (int j = 1; j < m - 1; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += sin_u[static_cast<std::size_t>(p) * n + i] * row[static_cast<std::size_t>(p) * m + j];
      }
      f(i, j) += acc;
    }
  }
  return f;
}

MoistureField solve_fourier(const DiffusionScenario& s, const GridSpec& grid) {
  auto f = solve_fourier_unclipped(s, grid);
  f.clip(0.0, 1.0);
  return f;
}

MoistureField solve_fd_oracle(const DiffusionScenario& s, const GridSpec& grid) {
  s.validate();
  validate_grid(grid);
  const int n = grid.height;
  const int m = grid.width;
  const double hu = grid.spacing_u();
  const double hv = grid.spacing_v();
  const double h = std::min(hu, hv);
  const double dt_max = 0.2 * h * h / s.diffusivity;

  MoistureField cur(grid, s.initial_moisture);
  apply_boundary(cur, s);
  if (s.t_eval == 0.0) return cur;

  const auto steps = static_cast<long>(std::ceil(s.t_eval / dt_max));
  const double dt = s.t_eval / static_cast<double>(steps);
  const double ru = s.diffusivity * dt / (hu * hu);
  const double rv = s.diffusivity * dt / (hv * hv);

  MoistureField next = cur;
  for (long step = 0; step < steps; ++step) {
    for (int i = 1; i < n - 1; ++i) {
      for (int j = 1; j < m - 1; ++j) {
        const double c = cur(i, j);
        next(i, j) = c + ru * (cur(i + 1, j) + cur(i - 1, j) - 2.0 * c) +
                     rv * (cur(i, j + 1) + cur(i, j - 1) - 2.0 * c);
      }
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace pgnn
