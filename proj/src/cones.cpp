#include "curvop/cones.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <tuple>

#include "curvop/parallel.hpp"
#include "curvop/sampling.hpp"

namespace curvop {

std::string_view cone_name(ConeId cone) {
  switch (cone) {
    case ConeId::CO: return "co";
    case ConeId::TWO_CO: return "2co";
    case ConeId::IC1: return "ic1";
    case ConeId::IC2: return "ic2";
    case ConeId::RIC: return "ric";
    case ConeId::SCAL: return "scal";
    case ConeId::SEC: return "sec";
  }
  return "?";
}

std::optional<ConeId> parse_cone(std::string_view name) {
  for (ConeId cone : kAllCones) {
    if (cone_name(cone) == name) return cone;
  }
  return std::nullopt;
}

std::string_view oracle_kind_name(OracleKind kind) {
  return kind == OracleKind::Exact ? "exact" : "heuristic";
}

OracleKind oracle_kind(ConeId cone) {
  switch (cone) {
    case ConeId::SEC:
    case ConeId::IC1:
    case ConeId::IC2: return OracleKind::Heuristic;
    default: return OracleKind::Exact;
  }
}

int extension_dim(ConeId cone) {
  switch (cone) {
    case ConeId::IC1: return 1;
    case ConeId::IC2: return 2;
    default: return 0;
  }
}

namespace {

struct FormTerm {
  double coef;
  int p, q, r, s;  // coef * <R(e_p ^ e_q), e_r ^ e_s>
};

constexpr std::array<FormTerm, 1> kSectionalTerms{{{1.0, 0, 1, 0, 1}}};
// R_1313 + R_1414 + R_2323 + R_2424 - 2 R_1234
constexpr std::array<FormTerm, 5> kIsotropicTerms{{{1.0, 0, 2, 0, 2},
                                                   {1.0, 0, 3, 0, 3},
                                                   {1.0, 1, 2, 1, 2},
                                                   {1.0, 1, 3, 1, 3},
                                                   {-2.0, 0, 1, 2, 3}}};

int frame_size(ConeId cone) { return cone == ConeId::SEC ? 2 : 4; }

std::span<const FormTerm> form_terms(ConeId cone) {
  if (cone == ConeId::SEC) return kSectionalTerms;
  return kIsotropicTerms;
}

int ambient_dim(const CurvatureOperator& r, ConeId cone) {
  const int m = r.n() + extension_dim(cone);
  if (m < frame_size(cone)) {
    throw DimensionError(std::string(cone_name(cone)) + " needs orthonormal " +
                         std::to_string(frame_size(cone)) + "-frames in R^" + std::to_string(m));
  }
  return m;
}

/// Modified Gram-Schmidt in place; equals the thin QR factor with positive diagonal.
void orthonormalize_in_place(Matrix& a) {
  for (int j = 0; j < a.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < j; ++i) a.col(j) -= a.col(i).dot(a.col(j)) * a.col(i);
    }
    a.col(j) /= a.col(j).norm();
  }
}

Matrix orthonormalize(Matrix a) {
  orthonormalize_in_place(a);
  return a;
}

/// Allocation-free evaluation of the frame form and its Euclidean gradient.
class FormEvaluator {
 public:
  FormEvaluator(const CurvatureOperator& r, ConeId cone)
      : r_(r.mat()), basis_(r.basis()), n_(r.n()), dim_(r.dim()), k_(frame_size(cone)),
        terms_(form_terms(cone)) {
    for (const FormTerm& t : terms_) {
      used_[t.p * 4 + t.q] = true;
      used_[t.r * 4 + t.s] = true;
    }
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q)
        if (used_[p * 4 + q]) {
          wedge_[p * 4 + q].resize(dim_);
          image_[p * 4 + q].resize(dim_);
        }
    pair_i_.resize(dim_);
    pair_j_.resize(dim_);
    for (int a = 0; a < dim_; ++a) std::tie(pair_i_[a], pair_j_[a]) = basis_.pair_of(a);
  }

  double operator()(const Matrix& frame, Matrix* grad) {
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) {
        if (!used_[p * 4 + q]) continue;
        Vector& w = wedge_[p * 4 + q];
        for (int a = 0; a < dim_; ++a) {
          const int i = pair_i_[a], j = pair_j_[a];
          w[a] = frame(i, p) * frame(j, q) - frame(j, p) * frame(i, q);
        }
        image_[p * 4 + q].noalias() = r_ * w;
      }
    double value = 0.0;
    for (const FormTerm& t : terms_) value += t.coef * image_[t.p * 4 + t.q].dot(wedge_[t.r * 4 + t.s]);
    if (grad) {
      grad->setZero(frame.rows(), k_);
      for (const FormTerm& t : terms_) {
        add_skew_action(*grad, image_[t.r * 4 + t.s], frame, t.coef, t.p, t.q);
        add_skew_action(*grad, image_[t.p * 4 + t.q], frame, t.coef, t.r, t.s);
      }
    }
    return value;
  }

 private:
  // grad_p += c M v_q and grad_q -= c M v_p, M the skew matrix of bivector b (truncated to R^n)
  void add_skew_action(Matrix& grad, const Vector& b, const Matrix& frame, double c, int p, int q) const {
    for (int a = 0; a < dim_; ++a) {
      const int i = pair_i_[a], j = pair_j_[a];
      const double cb = c * b[a];
      grad(i, p) += cb * frame(j, q);
      grad(j, p) -= cb * frame(i, q);
      grad(i, q) -= cb * frame(j, p);
      grad(j, q) += cb * frame(i, p);
    }
  }

  const Matrix& r_;
  const BivectorBasis& basis_;
  int n_, dim_, k_;
  std::span<const FormTerm> terms_;
  std::array<bool, 16> used_{};
  std::array<Vector, 16> wedge_, image_;
  std::vector<int> pair_i_, pair_j_;
};

struct SearchResult {
  double value = std::numeric_limits<double>::infinity();
  Matrix frame;
};

/// Riemannian conjugate gradients (Polak-Ribiere+) on the Stiefel manifold with
/// projection transport, Armijo backtracking and a Gram-Schmidt retraction.
SearchResult descend(FormEvaluator& form, double scale, Matrix frame, const SearchBudget& budget) {
  const Eigen::Index m = frame.rows(), k = frame.cols();
  Matrix grad(m, k), rgrad(m, k), prev_rgrad(m, k), dir(m, k), trial(m, k), trial_grad(m, k), sym(k, k);
  auto project = [&](const Matrix& base, const Matrix& v, Matrix& out) {
    sym.noalias() = base.transpose() * v;
    sym = 0.5 * (sym + sym.transpose()).eval();
    out = v;
    out.noalias() -= base * sym;
  };

  double f = form(frame, &grad);
  project(frame, grad, rgrad);
  dir = -rgrad;
  double step = 1.0 / scale;
  constexpr int kWindow = 10;
  std::array<double, kWindow> history{};
  for (int it = 0; it < budget.iterations; ++it) {
    const double gnorm2 = rgrad.squaredNorm();
    if (std::sqrt(gnorm2) <= budget.grad_tol * scale) break;
    double slope = dir.cwiseProduct(rgrad).sum();
    if (slope >= 0.0) {
      dir = -rgrad;
      slope = -gnorm2;
    }
    bool accepted = false;
    while (step * scale > 1e-14) {
      trial = frame + step * dir;
      orthonormalize_in_place(trial);
      const double ft = form(trial, &trial_grad);
      if (ft <= f + 1e-4 * step * slope) {
        frame.swap(trial);
        grad.swap(trial_grad);
        f = ft;
        accepted = true;
        step = std::min(2.0 * step, 10.0 / scale);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    prev_rgrad = rgrad;
    project(frame, grad, rgrad);
    project(frame, prev_rgrad, trial);  // transported previous gradient
    const double beta = std::max(0.0, rgrad.cwiseProduct(rgrad - trial).sum() / gnorm2);
    project(frame, dir, trial);  // transported previous direction
    dir = beta * trial - rgrad;

    if (it >= kWindow && history[it % kWindow] - f <= 1e-11 * scale) break;
    history[it % kWindow] = f;
  }
  return {f, std::move(frame)};
}

MembershipReport heuristic_margin(const CurvatureOperator& r, ConeId cone, const SearchBudget& budget) {
  const int m = ambient_dim(r, cone);
  const int k = frame_size(cone);
  const int starts = std::max(1, budget.starts);
  const double scale = std::max(r.norm(), 1e-300);
  std::vector<SearchResult> results(starts);
  parallel_for(
      static_cast<std::size_t>(starts),
      [&](std::size_t s) {
        Rng rng(mix_seed(budget.seed, s));
        FormEvaluator form(r, cone);
        results[s] = descend(form, scale, orthonormalize(gaussian_matrix(m, k, rng)), budget);
      },
      budget.threads);
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s) {
    if (results[s].value < results[best].value) best = s;
  }
  MembershipReport report;
  report.cone = cone;
  report.margin = results[best].value;
  report.witness.columns = results[best].frame;
  report.oracle_kind = OracleKind::Heuristic;
  return report;
}

// sum over frame vectors of R(a, b, c, d) via the full tensor
double tensor_form(const Tensor4& t, const Vector& a, const Vector& b, const Vector& c, const Vector& d) {
  const int n = t.n();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double ab = a[i] * b[j];
      if (ab == 0.0) continue;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) acc += t(i, j, k, l) * ab * c[k] * d[l];
    }
  return acc;
}

}  // namespace

double frame_form(const CurvatureOperator& r, ConeId cone, const Matrix& frame, Matrix* grad) {
  if (oracle_kind(cone) != OracleKind::Heuristic) {
    throw std::invalid_argument("frame_form is defined for sec, ic1 and ic2 only");
  }
  if (frame.cols() != frame_size(cone) || frame.rows() < r.n()) {
    throw DimensionError("frame has the wrong shape");
  }
  FormEvaluator form(r, cone);
  return form(frame, grad);
}

MembershipReport cone_margin(const CurvatureOperator& r, ConeId cone, const SearchBudget& budget) {
  if (oracle_kind(cone) == OracleKind::Heuristic) return heuristic_margin(r, cone, budget);

  MembershipReport report;
  report.cone = cone;
  report.oracle_kind = OracleKind::Exact;
  switch (cone) {
    case ConeId::CO: {
      const Spectrum sp = symmetric_spectrum(r.mat());
      report.margin = sp.values[0];
      report.witness.columns = sp.vectors.leftCols(1);
      break;
    }
    case ConeId::TWO_CO: {
      if (r.dim() < 2) throw DimensionError("2co needs at least two bivector directions (n >= 3)");
      const Spectrum sp = symmetric_spectrum(r.mat());
      report.margin = sp.values[0] + sp.values[1];
      report.witness.columns = sp.vectors.leftCols(2);
      break;
    }
    case ConeId::RIC: {
      const Spectrum sp = symmetric_spectrum(ricci(r).ric);
      report.margin = sp.values[0];
      report.witness.columns = sp.vectors.leftCols(1);
      break;
    }
    case ConeId::SCAL: {
      report.margin = ricci(r).scal;
      report.witness.columns = Matrix(r.n(), 0);
      break;
    }
    default: break;
  }
  return report;
}

MembershipReport member(const CurvatureOperator& r, ConeId cone, double tol, const SearchBudget& budget) {
  if (!(tol > 0.0)) throw std::invalid_argument("membership tolerance must be positive");
  if (budget.starts < 1) throw std::invalid_argument("search budget needs at least one start");
  MembershipReport report = cone_margin(r, cone, budget);
  report.inside = report.margin >= -tol;
  return report;
}

double evaluate_witness(const CurvatureOperator& r, ConeId cone, const Witness& witness) {
  const Tensor4 t = to_tensor(r);
  const int n = r.n();
  const Matrix& w = witness.columns;
  switch (cone) {
    case ConeId::CO:
    case ConeId::TWO_CO: {
      // sum_{ijkl} R_ijkl V_ij V_kl = 4 <R v, v> for the skew matrix V of v
      double acc = 0.0;
      for (int c = 0; c < w.cols(); ++c) {
        const Matrix skew = r.basis().to_skew(w.col(c));
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l) s += t(i, j, k, l) * skew(i, j) * skew(k, l);
        acc += s / 4.0;
      }
      return acc;
    }
    case ConeId::RIC: {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const Vector e = Vector::Unit(n, j);
        acc += tensor_form(t, w.col(0), e, w.col(0), e);
      }
      return acc;
    }
    case ConeId::SCAL: {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) acc += t(i, j, i, j);
      return acc;
    }
    case ConeId::SEC: {
      return tensor_form(t, w.col(0).head(n), w.col(1).head(n), w.col(0).head(n), w.col(1).head(n));
    }
    case ConeId::IC1:
    case ConeId::IC2: {
      std::array<Vector, 4> e;
      for (int p = 0; p < 4; ++p) e[p] = w.col(p).head(n);
      return tensor_form(t, e[0], e[2], e[0], e[2]) + tensor_form(t, e[0], e[3], e[0], e[3]) +
             tensor_form(t, e[1], e[2], e[1], e[2]) + tensor_form(t, e[1], e[3], e[1], e[3]) -
             2.0 * tensor_form(t, e[0], e[1], e[2], e[3]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double min_shift(const CurvatureOperator& r, ConeId cone, const ShiftConfig& cfg, const SearchBudget& budget) {
  const int n = r.n();
  switch (cone) {
    case ConeId::CO: return -symmetric_spectrum(r.mat()).values[0];
    case ConeId::TWO_CO: {
      const MembershipReport rep = cone_margin(r, cone, budget);
      return -rep.margin / 2.0;
    }
    case ConeId::RIC: return -symmetric_spectrum(ricci(r).ric).values[0] / (n - 1);
    case ConeId::SCAL: return -ricci(r).scal / (n * (n - 1));
    default: break;
  }

  const double pred_tol = 1e-12 * std::max(1.0, r.norm());
  auto inside = [&](double k) { return cone_margin(r.shifted(k), cone, budget).margin >= -pred_tol; };

  const double span = r.norm() > 0.0 ? r.norm() : 1.0;
  double lo = -span;
  double hi = span;
  int doublings = 0;
  while (!inside(hi)) {
    if (++doublings > cfg.max_doublings) {
      throw NoConvergenceError("min_shift: no inside point found for cone " + std::string(cone_name(cone)));
    }
    lo = hi;
    hi *= 2.0;
  }
  doublings = 0;
  while (inside(lo)) {
    if (++doublings > cfg.max_doublings) {
      throw NoConvergenceError("min_shift: no outside point found for cone " + std::string(cone_name(cone)));
    }
    hi = lo;
    lo *= 2.0;
  }
  while (hi - lo > cfg.tol) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? hi : lo) = mid;
  }
  return hi;
}

TangencyReport tangency_probe(ConeId cone, const TangencyConfig& cfg) {
  TangencyReport report;
  report.cone = cone;
  report.n = cfg.n;
  report.samples.resize(std::max(0, cfg.samples));
  const BasisPtr basis = build_basis(cfg.n);

  SearchBudget budget = cfg.budget;
  budget.threads = 1;  // parallelism lives at the sample level here

  parallel_for(
      report.samples.size(),
      [&](std::size_t i) {
        Rng rng(mix_seed(cfg.seed, i));
        CurvatureOperator r = random_bianchi(basis, rng);
        r = r * (1.0 / r.norm());
        const CurvatureOperator edge = r.shifted(min_shift(r, cone, ShiftConfig{}, budget));
        const CurvatureOperator point = edge.shifted(cfg.boundary_offset * edge.norm());

        const CurvatureOperator velocity = q(point) * 2.0;
        const double speed = velocity.norm();
        TangencySample& out = report.samples[i];
        auto margin_at = [&](double h) { return cone_margin(point + velocity * h, cone, budget).margin; };
        out.margin = margin_at(0.0);
        if (speed == 0.0) return;
        const double h = 1e-4 * point.norm() / speed;
        const double s1 = (margin_at(h) - out.margin) / h;
        const double s2 = (margin_at(0.5 * h) - out.margin) / (0.5 * h);
        out.slope = (2.0 * s2 - s1) / speed;
        const bool on_boundary = out.margin <= 1e-9 * point.norm();
        out.exit = on_boundary && out.slope < -cfg.tol;
      },
      cfg.threads);

  for (std::size_t i = 0; i < report.samples.size(); ++i) {
    const TangencySample& s = report.samples[i];
    if (s.exit) ++report.exits;
    if (report.worst_index < 0 || s.slope < report.worst_slope) {
      report.worst_slope = s.slope;
      report.worst_index = static_cast<int>(i);
    }
  }
  return report;
}

}  // namespace curvop
