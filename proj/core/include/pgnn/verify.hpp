#pragma once

#include <string>
#include <vector>

namespace pgnn {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;      // measured error
  double tolerance = 0.0;  // pass when value <= tolerance
  std::string detail;
};

struct VerifyOptions {
  /// Name of an operation whose analytic gradient is deliberately corrupted
  /// inside the checks ("conv2d", "linear", ...). Empty for a clean run.
  std::string inject_fault;
  double grad_tolerance = 1e-4;
};

/// Gradient checks for every layer and the end-to-end losses in double
/// precision, solver against the finite-difference oracle, colormap round
/// trip, and the physics loss on harmonic fields.
std::vector<VerifyCheck> run_verification(const VerifyOptions& options = {});

/// Gradient checks only; names are "grad:<operation>".
std::vector<VerifyCheck> run_gradient_checks(const VerifyOptions& options = {});

/// Operation names accepted by VerifyOptions::inject_fault.
std::vector<std::string> fault_targets();

}  // namespace pgnn
