#pragma once

#include <string>
#include <vector>

namespace curvop {

struct SelftestOptions {
  int n_min = 2;
  int n_max = 8;
  int random_operators = 20;
  double tol = 1e-10;
  /// Test hook: multiplies the # term used by the identity checks. Anything
  /// other than 1 corrupts the normalization and must fail "bw-identity".
  double sharp_scale = 1.0;
};

struct SelftestCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;  // worst residual observed
  std::string detail;
};

struct SelftestResult {
  std::vector<SelftestCheck> checks;
  bool passed() const;
  /// Name of the first failing check, empty if all passed.
  std::string first_failure() const;
};

/// Calibration suite: Boehm-Wilking identity, q(Id) = (n-1) Id and
/// scal(Id) = n(n-1), the sphere trajectory, and idempotence of the Bianchi projection.
SelftestResult run_selftest(const SelftestOptions& options = {});

}  // namespace curvop
