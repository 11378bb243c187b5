#include "doctest.h"

#include "curvop/pinching.hpp"
#include "curvop/sampling.hpp"

using namespace curvop;

namespace {

// Second route: D = N(L) - Q(L) with L = R + eps psi Id and
// N(L) = Q(R) + (eps/2)(phi' + alpha scal + 2 t alpha |ric|^2) Id.
Matrix defect_via_q(const DefectInputs& d) {
  const double psi = d.phi + d.t * d.alpha * d.scal;
  const CurvatureOperator l = d.R.shifted(d.eps * psi);
  const Matrix id = Matrix::Identity(d.R.dim(), d.R.dim());
  const Matrix n_of_l =
      q(d.R).mat() + 0.5 * d.eps * (d.phi_prime + d.alpha * d.scal + 2.0 * d.t * d.alpha * d.ric_norm_sq) * id;
  return n_of_l - q(l).mat();
}

}  // namespace

TEST_CASE("conditions at t = 0 reduce to the alpha interval") {
  PinchingConstants c = find_constants(3, 0.1, 1.0);
  const ConditionMargins m = condition_margins(c, 0.0);
  CHECK(m.c4_a == doctest::Approx(c.alpha * (0.5 - 0.1) - 1.0));
  CHECK(m.c4_b == doctest::Approx(1.0 - (c.alpha / 2.0 - 1.0)));
  CHECK(m.c4_c == doctest::Approx(1.0));
  CHECK(m.worst() >= 0.0);

  c.alpha = 2.0 / (1.0 - 0.2);
  CHECK(condition_margins(c, 0.0).c4_a == doctest::Approx(0.0).epsilon(1e-14));
  c.alpha = 4.0;
  CHECK(condition_margins(c, 0.0).c4_b == doctest::Approx(0.0).epsilon(1e-14));
  c.alpha = 4.1;
  CHECK(condition_margins(c, 0.0).c4() < 0.0);
  c.alpha = 2.4;
  CHECK(condition_margins(c, 0.0).c4() < 0.0);
  CHECK_THROWS_AS(condition_margins(c, -1.0), std::invalid_argument);
}

TEST_CASE("find_constants for (3, 0.1, 1)") {
  const PinchingConstants c = find_constants(3, 0.1, 1.0);
  CHECK(c.alpha == doctest::Approx(3.25));
  CHECK(c.alpha_lo == doctest::Approx(2.5));
  CHECK(c.beta >= 47.1125);
  // beta keeps 10% slack in C3 at t = 0 and is the first grid value doing so
  const double c3_floor = 3 * 2 + 2 * 5 * std::pow(1.0 + c.alpha * 0.1, 2);
  CHECK(c.beta / 2 - c3_floor >= 0.1 * c.beta / 2 - 1e-12);
  CHECK(c.beta / std::pow(10.0, 0.01) / 2 - c3_floor < 0.1 * c.beta / std::pow(10.0, 0.01) / 2);
  CHECK(c.T > 0.0);
  CHECK(c.K == doctest::Approx(1.0 + c.beta * c.T + 3.25 * (0.1 + c.T)).epsilon(1e-12));
  CHECK(c.phi(0.0) == 1.0);
  CHECK(c.phi_prime() == c.beta);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(find_constants(3, 0.25, 1.0), PinchingInputError);
  CHECK_THROWS_AS(find_constants(3, 0.3, 1.0), PinchingInputError);
  CHECK_THROWS_AS(find_constants(3, 0.0, 1.0), PinchingInputError);
  CHECK_THROWS_AS(find_constants(1, 0.1, 1.0), PinchingInputError);
  CHECK_THROWS_AS(find_constants(3, 0.1, -1.0), PinchingInputError);
  CHECK_NOTHROW(find_constants(3, 0.1, 0.0));
}

TEST_CASE("alpha interval") {
  CHECK(find_constants(3, 1e-9, 1.0).alpha_lo == doctest::Approx(2.0).epsilon(1e-8));
  double prev = 10.0;
  for (double a : {0.01, 0.05, 0.1, 0.15, 0.2, 0.24}) {
    const PinchingConstants c = find_constants(3, a, 1.0);
    const double width = c.alpha_hi - c.alpha_lo;
    CHECK(width < prev);
    CHECK(c.alpha > c.alpha_lo);
    CHECK(c.alpha < c.alpha_hi);
    prev = width;
  }
}

TEST_CASE("n = 2 constants") {
  const PinchingConstants c = find_constants(2, 0.1, 1.0);
  CHECK(c.beta / 2 >= 2 + 3 * std::pow(1 + c.alpha * 0.1, 2));
  CHECK(c.T > 0.0);
}

TEST_CASE("certified margins on a fine grid") {
  for (int n : {2, 3, 4, 5})
    for (double a : {0.05, 0.1, 0.2})
      for (double b : {0.0, 0.5, 1.0, 5.0}) {
        CAPTURE(n);
        CAPTURE(a);
        CAPTURE(b);
        const PinchingConstants c = find_constants(n, a, b);
        CHECK(c.K >= 1.0);
        CHECK(c.K >= c.phi(c.T) + c.alpha * (a + b * c.T) - 1e-12);
        double worst = std::numeric_limits<double>::infinity();
        const auto table = margin_table(c, 10001);
        CHECK(table.front().t == 0.0);
        CHECK(table.back().t == c.T);
        for (const auto& m : table) worst = std::min(worst, m.worst());
        CHECK(worst >= 0.0);
      }
}

TEST_CASE("defect operator") {
  const PinchingConstants c = find_constants(3, 0.1, 1.0);
  const auto basis = build_basis(3);

  SUBCASE("eps = 0 gives zero") {
    const CurvatureOperator r = random_operator(basis, 1, {RandomMode::GaussianBianchi});
    CHECK(defect_operator(make_defect_inputs(r, 0.0, 0.5 * c.T, c)).norm() == 0.0);
  }
  SUBCASE("identity line by hand") {
    for (int n : {3, 4, 5}) {
      const CurvatureOperator id = CurvatureOperator::identity(build_basis(n));
      const DefectInputs d = make_defect_inputs(id, 1.0, 0.0, c);
      const double expected = c.beta / 2 + c.alpha * n * (n - 1) / 2.0 - 3.0 * (n - 1);
      CHECK((defect_operator(d) - expected * id.mat()).norm() < 1e-12 * std::abs(expected) * id.norm());
    }
  }
  SUBCASE("two implementation paths agree") {
    for (int n : {3, 4, 5}) {
      const auto b = build_basis(n);
      for (std::uint64_t s = 0; s < 10; ++s) {
        const CurvatureOperator r = random_operator(b, 100 + s, {RandomMode::GaussianBianchi});
        const DefectInputs d = make_defect_inputs(r, 0.1 * (s + 1) / 1.1, c.T * s / 10.0, c);
        const Matrix a = defect_operator(d);
        CHECK((a - defect_via_q(d)).norm() < 1e-10 * std::max(1.0, a.norm()));
      }
    }
  }
  SUBCASE("linear in phi', quadratic in eps") {
    const CurvatureOperator r = random_operator(basis, 5, {RandomMode::GaussianBianchi});
    DefectInputs d = make_defect_inputs(r, 0.4, 0.3 * c.T, c);
    const Matrix base = defect_operator(d);
    const double h = 0.7;
    d.phi_prime += h;
    const Matrix bumped = defect_operator(d);
    d.phi_prime += h;
    const Matrix bumped2 = defect_operator(d);
    const Matrix id = Matrix::Identity(3, 3);
    CHECK((bumped - base - 0.5 * 0.4 * h * id).norm() < 1e-12);
    CHECK((bumped2 - 2 * bumped + base).norm() < 1e-12);

    d = make_defect_inputs(r, 0.4, 0.3 * c.T, c);
    auto at = [&](double eps) {
      DefectInputs e = d;
      e.eps = eps;
      return defect_operator(e);
    };
    const Matrix second = at(0.5) - 2 * at(0.4) + at(0.3);
    const Matrix second2 = at(0.6) - 2 * at(0.5) + at(0.4);
    CHECK((second - second2).norm() < 1e-11 * std::max(1.0, second.norm()));
    CHECK((at(0.6) - 3 * at(0.5) + 3 * at(0.4) - at(0.3)).norm() < 1e-11 * std::max(1.0, at(0.6).norm()));
    CHECK(at(0.0).norm() == 0.0);
  }
  SUBCASE("input checks") {
    const CurvatureOperator r = random_operator(basis, 5, {RandomMode::GaussianBianchi});
    DefectInputs d = make_defect_inputs(r, 0.4, 0.0, c);
    d.eps = 1.5;
    CHECK_THROWS_AS(defect_operator(d), std::invalid_argument);
    d.eps = 0.4;
    d.scal += 1.0;
    CHECK_THROWS_AS(defect_operator(d), std::invalid_argument);
  }
}

TEST_CASE("defect probe") {
  DefectProbeConfig cfg;
  cfg.samples = 200;
  for (int n : {3, 4}) {
    const PinchingConstants c = find_constants(n, 0.1, 1.0);
    const DefectProbeReport rep = defect_psd_probe(c, ConeId::CO, cfg);
    CHECK(rep.samples.size() == 200);
    CHECK(rep.violations == 0);
    CHECK(rep.bound_failures == 0);
    for (const auto& s : rep.samples) {
      CHECK(s.t >= 0.0);
      CHECK(s.t <= c.T);
      CHECK(s.eps >= 0.0);
      CHECK(s.eps <= 1.0);
      CHECK(std::abs(s.t * s.scal) <= c.A + c.B * s.t + 1e-12);
      CHECK(s.scal >= -s.eps * n * (n - 1) - 1e-12);
    }
  }
  const PinchingConstants c = find_constants(3, 0.1, 1.0);
  CHECK_NOTHROW(defect_psd_probe(c, ConeId::TWO_CO, DefectProbeConfig{20}));
  CHECK_THROWS_AS(defect_psd_probe(c, ConeId::SCAL, cfg), std::invalid_argument);
}

TEST_CASE("theorem check") {
  const PinchingConstants c = find_constants(3, 0.1, 1.0);
  TheoremProbeConfig cfg;
  const auto basis = build_basis(3);

  SUBCASE("eps = 0 keeps a co member inside") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const CurvatureOperator r0 = random_operator(basis, s, {RandomMode::Psd});
      const TheoremSample ts = theorem_check(r0, ConeId::CO, c, 0.0, cfg);
      CHECK(ts.max_shift <= cfg.tol);
      CHECK_FALSE(ts.violation);
    }
  }
  SUBCASE("identity stays interior") {
    const TheoremSample ts = theorem_check(CurvatureOperator::identity(basis), ConeId::CO, c, 0.5, cfg);
    CHECK(ts.max_shift <= 0.0);
    CHECK(ts.checked_states > 0);
    CHECK_FALSE(ts.violation);
  }
  SUBCASE("probe") {
    cfg.samples = 40;
    const TheoremProbeReport rep = theorem_probe(ConeId::CO, cfg);
    CHECK(rep.violations == 0);
    for (const auto& s : rep.samples) {
      CHECK(s.initial_shift <= cfg.eps + 1e-9);
      CHECK(s.window_end <= c.T + 1e-15);
    }
    CHECK_THROWS_AS(theorem_probe(ConeId::RIC, cfg), std::invalid_argument);
    cfg.eps = 2.0;
    CHECK_THROWS_AS(theorem_probe(ConeId::CO, cfg), std::invalid_argument);
  }
}
