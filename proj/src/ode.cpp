#include "curvop/ode.hpp"

#include <algorithm>
#include <cmath>

#include "curvop/parallel.hpp"
#include "curvop/sampling.hpp"

namespace curvop {

std::string_view method_name(Method method) {
  return method == Method::Rk4Fixed ? "rk4-fixed" : "rkf45-adaptive";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "rk4-fixed") return Method::Rk4Fixed;
  if (name == "rkf45-adaptive") return Method::Rkf45Adaptive;
  return std::nullopt;
}

void validate(const SolverConfig& cfg) {
  if (cfg.method == Method::Rk4Fixed && !(cfg.step > 0.0)) {
    throw std::invalid_argument("rk4-fixed needs a positive step");
  }
  if (cfg.method == Method::Rkf45Adaptive && (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0))) {
    throw std::invalid_argument("rkf45-adaptive needs positive rtol and atol");
  }
  if (!(cfg.max_step > 0.0)) throw std::invalid_argument("max_step must be positive");
  if (cfg.max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (cfg.store_every <= 0) throw std::invalid_argument("store_every must be positive");
}

namespace {

Matrix rhs(const BivectorBasis& basis, const Matrix& r) {
  Matrix out = r * r + sharp(basis, r, r);
  return out + out.transpose();  // 2 * symmetrized
}

class Recorder {
 public:
  Recorder(const BasisPtr& basis, int store_every) : basis_(basis), store_every_(store_every) {}

  void push(double t, Matrix m, bool force) {
    ++accepted_;
    if (!force && accepted_ % store_every_ != 0) return;
    store(t, std::move(m));
  }
  void store(double t, Matrix m) {
    if (!traj.times.empty() && t <= traj.times.back()) return;
    CurvatureOperator op = CurvatureOperator::trusted(basis_, std::move(m));
    const RicciData rd = ricci(op);
    traj.times.push_back(t);
    traj.scal_track.push_back(rd.scal);
    traj.ric_min_track.push_back(symmetric_spectrum(rd.ric).values[0]);
    traj.ops.push_back(std::move(op));
  }

  Trajectory traj;

 private:
  BasisPtr basis_;
  int store_every_;
  long accepted_ = 0;
};

// Keeps the state symmetric and on the Bianchi subspace; records drift.
void control_drift(const BasisPtr& basis, Matrix& state, Trajectory& traj) {
  traj.max_symmetry_residual = std::max(traj.max_symmetry_residual, symmetry_residual(state));
  state = 0.5 * (state + state.transpose()).eval();
  const double residual = bianchi_residual(*basis, state);
  traj.max_bianchi_residual = std::max(traj.max_bianchi_residual, residual);
  if (residual > 1e-12) {
    state = bianchi_project(basis, state).mat();
    ++traj.reprojections;
  }
}

bool exceeds_cap(const Matrix& state, double cap) { return !state.allFinite() || state.norm() > cap; }

}  // namespace

CurvatureOperator hamilton_rhs(const CurvatureOperator& r) {
  return CurvatureOperator::trusted(r.basis_ptr(), rhs(r.basis(), r.mat()));
}

Trajectory integrate(const CurvatureOperator& r0, double t_end, const SolverConfig& cfg) {
  if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be positive");
  validate(cfg);
  const BasisPtr& basis = r0.basis_ptr();
  const BivectorBasis& b = *basis;
  const double cap = cfg.norm_cap > 0.0 ? cfg.norm_cap : 1e6 * std::max(r0.norm(), 1e-300);

  Recorder rec(basis, cfg.store_every);
  Matrix state = r0.mat();
  double t = 0.0;
  rec.store(t, state);

  auto finish_blowup = [&](double when, const Matrix& last) {
    if (last.allFinite()) rec.store(when, last);
    rec.traj.blown_up = true;
    rec.traj.blowup_time_estimate = when;
  };

  if (cfg.method == Method::Rk4Fixed) {
    const double h_nominal = std::min(cfg.step, cfg.max_step);
    // times are k * h rather than a running sum, so no sliver step is left before t_end
    const double ratio = t_end / h_nominal;
    const double whole = std::round(ratio);
    const long n_steps = std::max(1.0, std::abs(ratio - whole) <= 1e-9 * ratio ? whole : std::ceil(ratio));
    for (long k = 0; k < n_steps; ++k) {
      if (rec.traj.steps >= cfg.max_steps) {
        throw TruncationError("integrate: max_steps exceeded at t=" + std::to_string(t), rec.traj);
      }
      const double t_next = k + 1 == n_steps ? t_end : (k + 1) * h_nominal;
      const double h = t_next - t;
      const Matrix k1 = rhs(b, state);
      const Matrix k2 = rhs(b, state + 0.5 * h * k1);
      const Matrix k3 = rhs(b, state + 0.5 * h * k2);
      const Matrix k4 = rhs(b, state + h * k3);
      Matrix next = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      ++rec.traj.steps;
      if (exceeds_cap(next, cap)) {
        finish_blowup(t_next, next);
        return std::move(rec.traj);
      }
      control_drift(basis, next, rec.traj);
      state = std::move(next);
      t = t_next;
      rec.push(t, state, k + 1 == n_steps);
    }
    return std::move(rec.traj);
  }

  // Runge-Kutta-Fehlberg 4(5), advancing with the fifth-order solution
  static constexpr double c2 = 1.0 / 4, c3 = 3.0 / 8, c4 = 12.0 / 13, c6 = 1.0 / 2;
  static constexpr double a21 = 1.0 / 4;
  static constexpr double a31 = 3.0 / 32, a32 = 9.0 / 32;
  static constexpr double a41 = 1932.0 / 2197, a42 = -7200.0 / 2197, a43 = 7296.0 / 2197;
  static constexpr double a51 = 439.0 / 216, a52 = -8.0, a53 = 3680.0 / 513, a54 = -845.0 / 4104;
  static constexpr double a61 = -8.0 / 27, a62 = 2.0, a63 = -3544.0 / 2565, a64 = 1859.0 / 4104,
                          a65 = -11.0 / 40;
  static constexpr double b1 = 16.0 / 135, b3 = 6656.0 / 12825, b4 = 28561.0 / 56430, b5 = -9.0 / 50,
                          b6 = 2.0 / 55;
  // fifth-order minus fourth-order weights
  static constexpr double e1 = b1 - 25.0 / 216, e3 = b3 - 1408.0 / 2565, e4 = b4 - 2197.0 / 4104,
                          e5 = b5 + 1.0 / 5, e6 = b6;
  (void)c2, (void)c3, (void)c4, (void)c6;  // autonomous system

  Matrix k1 = rhs(b, state);
  double h = cfg.step;
  if (!(h > 0.0)) {
    const double speed = k1.norm();
    h = speed > 0.0 ? 1e-3 * std::max(state.norm(), 1e-300) / speed : t_end;
  }
  h = std::min({h, cfg.max_step, t_end});

  while (t < t_end) {
    if (rec.traj.steps >= cfg.max_steps) {
      throw TruncationError("integrate: max_steps exceeded at t=" + std::to_string(t), rec.traj);
    }
    h = std::min(h, t_end - t);
    if (t_end - t - h <= 1e-12 * t_end) h = t_end - t;
    if (h <= 1e-15 * std::max(t, 1.0)) {
      // step size collapsed: the solution is escaping to infinity
      finish_blowup(t, state);
      return std::move(rec.traj);
    }
    const Matrix k2 = rhs(b, state + h * a21 * k1);
    const Matrix k3 = rhs(b, state + h * (a31 * k1 + a32 * k2));
    const Matrix k4 = rhs(b, state + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Matrix k5 = rhs(b, state + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Matrix k6 = rhs(b, state + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Matrix next = state + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Matrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6);
    ++rec.traj.steps;

    double err_norm = 0.0;
    bool finite = next.allFinite() && err.allFinite();
    if (finite) {
      const Eigen::ArrayXXd scale =
          cfg.atol + cfg.rtol * state.array().abs().max(next.array().abs());
      err_norm = std::sqrt((err.array() / scale).square().mean());
    }
    if (!finite || err_norm > 1.0) {
      const double factor = finite ? std::max(0.2, 0.9 * std::pow(err_norm, -0.2)) : 0.2;
      h *= factor;
      continue;
    }

    const double t_next = (t_end - t <= h) ? t_end : t + h;
    if (exceeds_cap(next, cap)) {
      finish_blowup(t_next, next);
      return std::move(rec.traj);
    }
    control_drift(basis, next, rec.traj);
    state = std::move(next);
    t = t_next;
    rec.push(t, state, t >= t_end);
    k1 = rhs(b, state);
    const double grow = err_norm > 0.0 ? std::min(5.0, 0.9 * std::pow(err_norm, -0.2)) : 5.0;
    h = std::min(h * grow, cfg.max_step);
  }
  return std::move(rec.traj);
}

namespace {

// d/dt at x[i] of the polynomial interpolating (x[j], y[j]) for j in [lo, hi]
double interpolant_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t i,
                         std::size_t lo, std::size_t hi) {
  double slope = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) {
    double w = 0.0;
    if (j == i) {
      for (std::size_t m = lo; m <= hi; ++m)
        if (m != i) w += 1.0 / (x[i] - x[m]);
    } else {
      double num = 1.0, den = 1.0;
      for (std::size_t m = lo; m <= hi; ++m) {
        if (m == j) continue;
        den *= x[j] - x[m];
        if (m != i) num *= x[i] - x[m];
      }
      w = num / den;
    }
    slope += w * y[j];
  }
  return slope;
}

}  // namespace

double scal_rate_check(const Trajectory& traj) {
  const std::size_t size = traj.times.size();
  if (size < 3) throw std::invalid_argument("scal_rate_check needs at least 3 samples");
  std::vector<double> rate(size);
  double scale = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    rate[i] = 2.0 * ricci(traj.ops[i]).ric_norm_sq;
    scale = std::max(scale, rate[i]);
  }
  const std::size_t half = size >= 5 ? 2 : 1;
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < size; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(size - 1, lo + 2 * half);
    const std::size_t lo_adj = hi - 2 * half;
    const double d = interpolant_slope(traj.times, traj.scal_track, i, lo_adj, hi);
    worst = std::max(worst, std::abs(d - rate[i]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

InvarianceReport invariance_probe(ConeId cone, const InvarianceConfig& cfg) {
  if (!(cfg.horizon_fraction > 0.0 && cfg.horizon_fraction < 1.0)) {
    throw std::invalid_argument("horizon_fraction must lie in (0, 1)");
  }
  validate(cfg.solver);
  InvarianceReport report;
  report.cone = cone;
  report.n = cfg.n;
  report.samples.resize(std::max(0, cfg.samples));
  const BasisPtr basis = build_basis(cfg.n);
  SearchBudget budget = cfg.budget;
  budget.threads = 1;

  parallel_for(
      report.samples.size(),
      [&](std::size_t i) {
        const RandomSpec spec{RandomMode::NearConeBoundary, cone, cfg.boundary_offset};
        const CurvatureOperator r0 = random_operator(basis, mix_seed(cfg.seed, i), spec, budget);
        InvarianceSample& out = report.samples[i];
        const double norm0 = std::max(r0.norm(), 1e-300);
        out.initial_margin = cone_margin(r0, cone, budget).margin / norm0;

        SolverConfig scout{Method::Rkf45Adaptive, 0.0, 1e-8, 1e-12};
        const double search_end = 100.0 / norm0;
        const Trajectory probe = integrate(r0, search_end, scout);
        out.blowup_estimate = probe.blown_up ? *probe.blowup_time_estimate : search_end;
        out.horizon = cfg.horizon_fraction * out.blowup_estimate;

        const Trajectory traj = integrate(r0, out.horizon, cfg.solver);
        out.min_margin = out.initial_margin;
        for (std::size_t s = 0; s < traj.ops.size(); ++s) {
          const bool last = s + 1 == traj.ops.size();
          if (s % cfg.check_every != 0 && !last) continue;
          const double scale = std::max(traj.ops[s].norm(), 1e-300);
          const double m = cone_margin(traj.ops[s], cone, budget).margin / scale;
          if (m < out.min_margin) {
            out.min_margin = m;
            out.min_margin_time = traj.times[s];
          }
        }
        out.violated = out.min_margin < -cfg.tol;
      },
      cfg.threads);

  report.global_min_margin = report.samples.empty() ? 0.0 : report.samples.front().min_margin;
  for (const auto& s : report.samples) {
    report.global_min_margin = std::min(report.global_min_margin, s.min_margin);
    if (s.violated) ++report.violations;
  }
  return report;
}

}  // namespace curvop
