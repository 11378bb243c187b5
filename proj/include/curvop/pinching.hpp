#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "curvop/cones.hpp"
#include "curvop/ode.hpp"

namespace curvop {

class PinchingInputError : public std::invalid_argument {
 public:
  explicit PinchingInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Constants of the lower-bound estimate for L = R + eps (phi(t) + t alpha scal) Id,
/// with phi(t) = 1 + beta t.
struct PinchingConstants {
  int n = 0;
  double A = 0.0;
  double B = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double T = 0.0;
  double K = 0.0;
  double alpha_lo = 0.0;  // open interval (alpha_lo, alpha_hi) of admissible alpha
  double alpha_hi = 4.0;

  double phi(double t) const { return 1.0 + beta * t; }
  double phi_prime() const { return beta; }
};

/// Range of the product t * scal over which C1 and C2 are taken in the worst case.
struct TScalWindow {
  double lo = 0.0;
  double hi = 0.0;
};

/// The default window [-n(n-1) t, A + B t] used to reduce C1/C2 to C4.
TScalWindow default_window(const PinchingConstants& c, double t);

/// Signed margins; a condition holds when its margin is >= 0.
struct ConditionMargins {
  double t = 0.0;
  double c1 = 0.0;        // phi + t alpha scal >= 0
  double c2_lower = 0.0;  // (1/2 - t scal) alpha - phi >= 0
  double c2_upper = 0.0;  // 1 - [(1/2 - t scal) alpha - phi] >= 0
  double c3 = 0.0;        // phi'/2 - n(n-1) - (n-1)(2n-1)(phi + alpha(A+Bt))^2 >= 0
  double c4_a = 0.0;      // (1/2 - (A+Bt)) alpha - phi >= 0
  double c4_b = 0.0;      // 1 - [(1/2 + t n(n-1)) alpha - phi] >= 0
  double c4_c = 0.0;      // phi - n(n-1) t alpha >= 0

  double c2() const { return std::min(c2_lower, c2_upper); }
  double c4() const { return std::min({c4_a, c4_b, c4_c}); }
  double worst() const { return std::min({c1, c2(), c3, c4()}); }
};

ConditionMargins condition_margins(const PinchingConstants& c, double t,
                                   std::optional<TScalWindow> window = std::nullopt);

/// alpha = midpoint of (2/(1-2A), 4); beta = smallest 10^(j/100) with C3 at
/// t = 0 holding with margin >= 10% of beta/2; T = first failure of C3/C4
/// located on a 10^3 grid and refined by bisection, then certified on 10^4
/// points; K = phi(T) + alpha (A + B T).
PinchingConstants find_constants(int n, double A, double B);

/// Margins at `points` equally spaced times over [0, T] (both ends included).
std::vector<ConditionMargins> margin_table(const PinchingConstants& c, int points);

struct DefectInputs {
  CurvatureOperator R;
  double eps = 0.0;
  double t = 0.0;
  double scal = 0.0;
  double ric_norm_sq = 0.0;
  double phi = 1.0;
  double phi_prime = 0.0;
  double alpha = 0.0;
};

/// Fills scal and |ric|^2 from R and phi, phi', alpha from the constants.
DefectInputs make_defect_inputs(const CurvatureOperator& r, double eps, double t, const PinchingConstants& c);

/// D(L) = (eps/2)(phi' + alpha scal + 2 t alpha |ric|^2) Id
///        - 2 eps psi (ric ^ id) - (n-1) eps^2 psi^2 Id,   psi = phi + t alpha scal.
Matrix defect_operator(const DefectInputs& d);

struct DefectSample {
  double t = 0.0;
  double eps = 0.0;
  double scal = 0.0;
  double psi = 0.0;
  double lambda_min = 0.0;  // smallest eigenvalue of D(L)
  double defect_norm = 0.0;
  bool ricci_bound_ok = false;  // ric(R) >= -(n-1) eps psi id
  bool wedge_bound_ok = false;  // 2 ric ^ id <= (scal + (n-1)^2 eps psi) Id
  bool violation = false;
  int rejected_draws = 0;
};

struct DefectProbeConfig {
  int samples = 1000;
  double tol = 1e-8;  // relative to max(1, |D|)
  double scal_cap = 1e3;  // caps the scal draw when (A+Bt)/t is unbounded
  std::uint64_t seed = 1;
  SearchBudget budget{};
  int max_draws = 10000;
  int threads = 0;
};

struct DefectProbeReport {
  ConeId cone = ConeId::CO;
  PinchingConstants constants;
  std::vector<DefectSample> samples;
  int violations = 0;
  int bound_failures = 0;
  double worst_lambda_min = 0.0;
};

/// Samples admissible states (L on the cone boundary, |t scal| <= A + B t,
/// scal >= -eps n(n-1), t in [0, T], eps in [0, 1]) and checks that D(L) >= 0.
DefectProbeReport defect_psd_probe(const PinchingConstants& c, ConeId cone, const DefectProbeConfig& cfg);

struct TheoremSample {
  double initial_shift = 0.0;  // min_shift(R0), <= eps by construction
  double window_end = 0.0;     // last time inside the scal window and before T
  double max_shift = 0.0;      // max over the window of min_shift(R(t))
  double max_excess = 0.0;     // max over the window of min_shift(R(t)) - K eps
  double max_psi_excess = 0.0; // max of min_shift(R(t)) - eps psi(t)
  int checked_states = 0;
  bool violation = false;
};

struct TheoremProbeConfig {
  int n = 3;
  double A = 0.1;
  double B = 1.0;
  double eps = 0.5;
  int samples = 200;
  double tol = 1e-6;
  double scale_max = 10.0;  // R0 = mu * (boundary point), mu ~ U[0, scale_max]
  SolverConfig solver{Method::Rkf45Adaptive, 0.0, 1e-10, 1e-13};
  int states_per_window = 400;  // caps the solver step at T / states_per_window
  std::uint64_t seed = 1;
  SearchBudget budget{};
  int threads = 0;
};

struct TheoremProbeReport {
  ConeId cone = ConeId::CO;
  PinchingConstants constants;
  std::vector<TheoremSample> samples;
  int violations = 0;
  double worst_excess = 0.0;
};

/// Follows one trajectory of Hamilton's ODE from R0 and checks
/// min_shift(R(t)) <= K eps + tol while |scal(t)| <= A/t + B and t < T.
TheoremSample theorem_check(const CurvatureOperator& r0, ConeId cone, const PinchingConstants& c, double eps,
                            const TheoremProbeConfig& cfg);

/// Reaction-term (ODE-level) probe of the lower bound: no Laplacian is present,
/// so this exercises the mechanism of the estimate rather than the flow itself.
TheoremProbeReport theorem_probe(ConeId cone, const TheoremProbeConfig& cfg);

}  // namespace curvop
