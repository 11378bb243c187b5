#include "curvop/pinching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curvop/parallel.hpp"
#include "curvop/sampling.hpp"

namespace curvop {

namespace {

double nn1(int n) { return static_cast<double>(n) * (n - 1); }

}  // namespace

TScalWindow default_window(const PinchingConstants& c, double t) {
  return {-nn1(c.n) * t, c.A + c.B * t};
}

ConditionMargins condition_margins(const PinchingConstants& c, double t, std::optional<TScalWindow> window) {
  if (!(t >= 0.0)) throw std::invalid_argument("condition_margins: t must be >= 0");
  const TScalWindow w = window.value_or(default_window(c, t));
  const int n = c.n;
  const double phi = c.phi(t);
  const double bound = c.A + c.B * t;

  ConditionMargins m;
  m.t = t;
  // alpha > 0, so the worst case of each inequality sits at one end of the window
  m.c1 = phi + c.alpha * w.lo;
  m.c2_lower = (0.5 - w.hi) * c.alpha - phi;
  m.c2_upper = 1.0 - ((0.5 - w.lo) * c.alpha - phi);
  const double inner = phi + c.alpha * bound;
  m.c3 = c.phi_prime() / 2.0 - nn1(n) - (n - 1.0) * (2.0 * n - 1.0) * inner * inner;
  m.c4_a = (0.5 - bound) * c.alpha - phi;
  m.c4_b = 1.0 - ((0.5 + t * nn1(n)) * c.alpha - phi);
  m.c4_c = phi - nn1(n) * t * c.alpha;
  return m;
}

namespace {

bool holds(const PinchingConstants& c, double t) {
  const ConditionMargins m = condition_margins(c, t);
  return m.c3 >= 0.0 && m.c4() >= 0.0;
}

// Largest t in [0, t_hi] such that C3 and C4 hold on a grid of `points` over [0, t]
// (the first failing grid point is refined by bisection).
double first_failure(const PinchingConstants& c, double t_hi, int points) {
  double last_ok = 0.0;
  for (int i = 1; i <= points; ++i) {
    const double t = t_hi * (static_cast<double>(i) / points);
    if (holds(c, t)) {
      last_ok = t;
      continue;
    }
    double lo = last_ok, hi = t;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(hi, 1e-300); ++it) {
      const double mid = 0.5 * (lo + hi);
      (holds(c, mid) ? lo : hi) = mid;
    }
    return lo;
  }
  return t_hi;
}

}  // namespace

PinchingConstants find_constants(int n, double A, double B) {
  if (n < 2) throw PinchingInputError("dimension n must be >= 2");
  if (!(A > 0.0 && A < 0.25)) throw PinchingInputError("A must lie in (0, 1/4)");
  if (!(B >= 0.0) || !std::isfinite(B)) throw PinchingInputError("B must be a finite value >= 0");

  PinchingConstants c;
  c.n = n;
  c.A = A;
  c.B = B;
  c.alpha_lo = 2.0 / (1.0 - 2.0 * A);
  c.alpha_hi = 4.0;
  if (!(c.alpha_lo < c.alpha_hi)) throw PinchingInputError("admissible alpha interval is empty");
  c.alpha = 0.5 * (c.alpha_lo + c.alpha_hi);

  // C3 at t = 0 with 10% slack: 0.9 * beta/2 >= n(n-1) + (n-1)(2n-1)(1 + alpha A)^2
  const double inner = 1.0 + c.alpha * A;
  const double required = 2.0 * (nn1(n) + (n - 1.0) * (2.0 * n - 1.0) * inner * inner) / 0.9;
  int j = static_cast<int>(std::ceil(100.0 * std::log10(required))) - 1;
  auto grid_beta = [](int k) { return std::pow(10.0, k / 100.0); };
  auto slack_ok = [&](double beta) {
    PinchingConstants probe = c;
    probe.beta = beta;
    return condition_margins(probe, 0.0).c3 >= 0.1 * beta / 2.0;
  };
  while (!slack_ok(grid_beta(j))) ++j;
  while (slack_ok(grid_beta(j - 1))) --j;
  c.beta = grid_beta(j);

  if (!holds(c, 0.0)) throw std::logic_error("find_constants: conditions fail at t = 0");

  // C4a is linear and decreasing, so it bounds the admissible horizon
  const double t_hi = ((0.5 - A) * c.alpha - 1.0) / (B * c.alpha + c.beta);
  double T = first_failure(c, t_hi, 1000);
  for (int round = 0; round < 8; ++round) {
    const double certified = first_failure(c, T, 10000);
    if (certified == T) break;
    T = certified;
  }
  if (!(T > 0.0)) throw std::logic_error("find_constants: no admissible horizon");
  c.T = T;
  c.K = c.phi(T) + c.alpha * (A + B * T);
  return c;
}

std::vector<ConditionMargins> margin_table(const PinchingConstants& c, int points) {
  if (points < 2) throw std::invalid_argument("margin_table needs at least 2 points");
  std::vector<ConditionMargins> rows;
  rows.reserve(points);
  for (int i = 0; i < points; ++i) {
    rows.push_back(condition_margins(c, c.T * (static_cast<double>(i) / (points - 1))));
  }
  return rows;
}

DefectInputs make_defect_inputs(const CurvatureOperator& r, double eps, double t, const PinchingConstants& c) {
  const RicciData rd = ricci(r);
  return DefectInputs{r, eps, t, rd.scal, rd.ric_norm_sq, c.phi(t), c.phi_prime(), c.alpha};
}

Matrix defect_operator(const DefectInputs& d) {
  if (!(d.eps >= 0.0 && d.eps <= 1.0)) throw std::invalid_argument("defect_operator: eps must lie in [0, 1]");
  const RicciData rd = ricci(d.R);
  if (std::abs(rd.scal - d.scal) > 1e-9 * std::max(1.0, std::abs(rd.scal))) {
    throw std::invalid_argument("defect_operator: scal is inconsistent with R");
  }
  const int n = d.R.n();
  const int dim = d.R.dim();
  const double psi = d.phi + d.t * d.alpha * d.scal;
  const Matrix id = Matrix::Identity(dim, dim);
  const Matrix wedge = wedge_sym(d.R.basis(), rd.ric, Matrix::Identity(n, n));
  return (d.eps / 2.0) * (d.phi_prime + d.alpha * d.scal + 2.0 * d.t * d.alpha * d.ric_norm_sq) * id -
         2.0 * d.eps * psi * wedge - (n - 1.0) * d.eps * d.eps * psi * psi * id;
}

namespace {

void require_theorem_cone(ConeId cone, bool allow_ricci) {
  switch (cone) {
    case ConeId::CO:
    case ConeId::TWO_CO:
    case ConeId::IC1:
    case ConeId::IC2: return;
    case ConeId::RIC:
      if (allow_ricci) return;
      break;
    default: break;
  }
  throw std::invalid_argument("cone " + std::string(cone_name(cone)) +
                              " is not between the nonnegative curvature operators and Ricci >= 0");
}

// Unit-norm Gaussian operator moved onto the cone boundary.
CurvatureOperator boundary_point(const BasisPtr& basis, ConeId cone, Rng& rng, const SearchBudget& budget) {
  CurvatureOperator s = random_bianchi(basis, rng);
  s = s * (1.0 / s.norm());
  return s.shifted(min_shift(s, cone, ShiftConfig{}, budget));
}

}  // namespace

DefectProbeReport defect_psd_probe(const PinchingConstants& c, ConeId cone, const DefectProbeConfig& cfg) {
  require_theorem_cone(cone, true);
  DefectProbeReport report;
  report.cone = cone;
  report.constants = c;
  report.samples.resize(std::max(0, cfg.samples));
  const BasisPtr basis = build_basis(c.n);
  const int n = c.n;
  SearchBudget budget = cfg.budget;
  budget.threads = 1;

  parallel_for(
      report.samples.size(),
      [&](std::size_t i) {
        Rng rng(mix_seed(cfg.seed, i));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        DefectSample& out = report.samples[i];
        for (int draw = 0; draw < cfg.max_draws; ++draw) {
          const double t = c.T * unit(rng);
          const double eps = unit(rng);
          const CurvatureOperator edge = boundary_point(basis, cone, rng, budget);
          const double target = unit(rng);
          const double sigma = ricci(edge).scal;
          const double bound = c.A + c.B * t;
          double lo = -eps * nn1(n);
          double hi = cfg.scal_cap;
          if (t > 0.0) {
            lo = std::max(lo, -bound / t);
            hi = std::min(hi, bound / t);
          }
          if (!(sigma > 1e-12) || !(hi > lo)) {
            ++out.rejected_draws;
            continue;
          }
          // L = mu * edge and R = L - eps psi Id with psi = phi + t alpha scal(R):
          // scal(R) = (mu sigma - eps n(n-1) phi) / d,  d = 1 + t alpha eps n(n-1)
          const double phi = c.phi(t);
          const double d = 1.0 + t * c.alpha * eps * nn1(n);
          const double scal_target = lo + (hi - lo) * target;
          const double mu = (d * scal_target + eps * nn1(n) * phi) / sigma;
          if (!(mu >= 0.0)) {
            ++out.rejected_draws;
            continue;
          }
          const double psi = (phi + t * c.alpha * mu * sigma) / d;
          const CurvatureOperator r = (edge * mu).shifted(-eps * psi);
          const RicciData rd = ricci(r);
          if (std::abs(t * rd.scal) > bound * (1.0 + 1e-12) || rd.scal < -eps * nn1(n) * (1.0 + 1e-12) ||
              psi < 0.0) {
            ++out.rejected_draws;
            continue;
          }

          const DefectInputs inputs = make_defect_inputs(r, eps, t, c);
          const Matrix defect = defect_operator(inputs);
          const double psi_r = phi + t * c.alpha * rd.scal;
          out.t = t;
          out.eps = eps;
          out.scal = rd.scal;
          out.psi = psi_r;
          out.lambda_min = symmetric_spectrum(defect).values[0];
          out.defect_norm = defect.norm();
          out.violation = out.lambda_min < -cfg.tol * std::max(1.0, out.defect_norm);

          const double scale = std::max(1.0, rd.ric.norm());
          const Vector ric_eigs = symmetric_spectrum(rd.ric).values;
          out.ricci_bound_ok = ric_eigs[0] >= -(n - 1.0) * eps * psi_r - 1e-10 * scale;
          const Matrix wedge = 2.0 * wedge_sym(*basis, rd.ric, Matrix::Identity(n, n));
          const double wedge_max = symmetric_spectrum(wedge).values.maxCoeff();
          out.wedge_bound_ok = wedge_max <= rd.scal + (n - 1.0) * (n - 1.0) * eps * psi_r + 1e-10 * scale;
          return;
        }
        throw std::runtime_error("defect_psd_probe: no admissible draw within max_draws");
      },
      cfg.threads);

  report.worst_lambda_min = std::numeric_limits<double>::infinity();
  for (const DefectSample& s : report.samples) {
    if (s.violation) ++report.violations;
    if (!s.ricci_bound_ok || !s.wedge_bound_ok) ++report.bound_failures;
    report.worst_lambda_min = std::min(report.worst_lambda_min, s.lambda_min);
  }
  return report;
}

TheoremSample theorem_check(const CurvatureOperator& r0, ConeId cone, const PinchingConstants& c, double eps,
                            const TheoremProbeConfig& cfg) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("theorem_check: eps must lie in [0, 1]");
  SearchBudget budget = cfg.budget;
  budget.threads = 1;
  TheoremSample out;
  out.initial_shift = min_shift(r0, cone, ShiftConfig{}, budget);

  SolverConfig solver = cfg.solver;
  solver.max_step = std::min(solver.max_step, c.T / std::max(1, cfg.states_per_window));
  const Trajectory traj = integrate(r0, c.T, solver);

  out.max_shift = -std::numeric_limits<double>::infinity();
  out.max_excess = -std::numeric_limits<double>::infinity();
  out.max_psi_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < traj.ops.size(); ++s) {
    const double t = traj.times[s];
    if (t >= c.T) break;
    const double scal = traj.scal_track[s];
    if (t > 0.0 && std::abs(scal) > c.A / t + c.B) break;
    const double shift = min_shift(traj.ops[s], cone, ShiftConfig{}, budget);
    const double psi = c.phi(t) + t * c.alpha * scal;
    out.window_end = t;
    ++out.checked_states;
    out.max_shift = std::max(out.max_shift, shift);
    out.max_excess = std::max(out.max_excess, shift - c.K * eps);
    out.max_psi_excess = std::max(out.max_psi_excess, shift - eps * psi);
  }
  out.violation = out.max_excess > cfg.tol;
  return out;
}

TheoremProbeReport theorem_probe(ConeId cone, const TheoremProbeConfig& cfg) {
  require_theorem_cone(cone, false);
  if (!(cfg.eps >= 0.0 && cfg.eps <= 1.0)) throw std::invalid_argument("theorem_probe: eps must lie in [0, 1]");
  TheoremProbeReport report;
  report.cone = cone;
  report.constants = find_constants(cfg.n, cfg.A, cfg.B);
  report.samples.resize(std::max(0, cfg.samples));
  const BasisPtr basis = build_basis(cfg.n);
  SearchBudget budget = cfg.budget;
  budget.threads = 1;

  parallel_for(
      report.samples.size(),
      [&](std::size_t i) {
        Rng rng(mix_seed(cfg.seed, i));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const CurvatureOperator edge = boundary_point(basis, cone, rng, budget);
        const double mu = cfg.scale_max * unit(rng);
        const double depth = unit(rng);
        const CurvatureOperator r0 = (edge * mu).shifted(-depth * cfg.eps);
        report.samples[i] = theorem_check(r0, cone, report.constants, cfg.eps, cfg);
      },
      cfg.threads);

  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (const TheoremSample& s : report.samples) {
    if (s.violation) ++report.violations;
    if (s.checked_states > 0) report.worst_excess = std::max(report.worst_excess, s.max_excess);
  }
  return report;
}

}  // namespace curvop
