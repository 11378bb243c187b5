#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "curvop/cones.hpp"

namespace curvop {

enum class Method { Rk4Fixed, Rkf45Adaptive };

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);

struct SolverConfig {
  Method method = Method::Rk4Fixed;
  double step = 1e-4;  // fixed step, or initial step for the adaptive method (<= 0: automatic)
  double rtol = 1e-9;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  /// Blow-up guard; <= 0 means 1e6 * max(|R0|, 1e-300).
  double norm_cap = 0.0;
  long max_steps = 10'000'000;
  /// Keep every k-th accepted step (the final state is always kept).
  int store_every = 1;
};

void validate(const SolverConfig& cfg);

/// Solution of dR/dt = 2 Q(R) sampled at accepted steps.
struct Trajectory {
  std::vector<double> times;
  std::vector<CurvatureOperator> ops;
  std::vector<double> scal_track;
  std::vector<double> ric_min_track;
  bool blown_up = false;
  std::optional<double> blowup_time_estimate;
  long steps = 0;
  /// Steps whose Bianchi residual exceeded 1e-12 and were re-projected.
  int reprojections = 0;
  double max_bianchi_residual = 0.0;
  double max_symmetry_residual = 0.0;
};

class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Right-hand side 2 Q(R) of Hamilton's ODE.
CurvatureOperator hamilton_rhs(const CurvatureOperator& r);

/// Integrates Hamilton's ODE from R0 to t_end, or until |R| exceeds the norm cap.
/// Throws TruncationError (carrying the partial trajectory) after max_steps.
Trajectory integrate(const CurvatureOperator& r0, double t_end, const SolverConfig& cfg = {});

/// Max over interior samples of |d scal/dt - 2|ric|^2|, normalized by the
/// largest 2|ric|^2 on the trajectory. The derivative is the slope at t_i of
/// the interpolating polynomial through the (up to) five nearest samples.
double scal_rate_check(const Trajectory& traj);

struct InvarianceConfig {
  int n = 4;
  int samples = 100;
  double horizon_fraction = 0.5;
  double tol = 1e-6;
  double boundary_offset = 1e-3;  // interior offset of the near-boundary sampler
  SolverConfig solver{Method::Rkf45Adaptive, 0.0, 1e-10, 1e-12};
  std::uint64_t seed = 1;
  SearchBudget budget{};
  int check_every = 1;  // evaluate the margin on every k-th stored state
  int threads = 0;
};

struct InvarianceSample {
  double initial_margin = 0.0;  // relative to |R0|
  double min_margin = 0.0;      // min over the trajectory of margin(R(t)) / |R(t)|
  double min_margin_time = 0.0;
  double horizon = 0.0;
  double blowup_estimate = 0.0;
  bool violated = false;
};

struct InvarianceReport {
  ConeId cone = ConeId::CO;
  int n = 0;
  std::vector<InvarianceSample> samples;
  double global_min_margin = 0.0;
  int violations = 0;
};

/// Starts trajectories at near-boundary members of the cone and tracks the
/// membership margin up to horizon_fraction of the estimated blow-up time.
InvarianceReport invariance_probe(ConeId cone, const InvarianceConfig& cfg);

}  // namespace curvop
