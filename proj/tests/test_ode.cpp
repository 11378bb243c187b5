#include "doctest.h"

#include "curvop/ode.hpp"
#include "curvop/sampling.hpp"

using namespace curvop;

namespace {

double sphere_error(const Trajectory& traj, int n, double t_max) {
  const CurvatureOperator id = CurvatureOperator::identity(build_basis(n));
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (traj.times[i] > t_max) break;
    const double f = 1.0 / (1.0 - 2.0 * (n - 1) * traj.times[i]);
    worst = std::max(worst, (traj.ops[i].mat() - f * id.mat()).norm() / (f * id.norm()));
  }
  return worst;
}

}  // namespace

TEST_CASE("method names and config validation") {
  CHECK(parse_method("rk4-fixed") == Method::Rk4Fixed);
  CHECK(parse_method(method_name(Method::Rkf45Adaptive)) == Method::Rkf45Adaptive);
  CHECK_FALSE(parse_method("euler").has_value());
  SolverConfig bad;
  bad.step = 0.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = SolverConfig{Method::Rkf45Adaptive, 0.0, -1.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  const CurvatureOperator id = CurvatureOperator::identity(build_basis(3));
  CHECK_THROWS_AS(integrate(id, 0.0), std::invalid_argument);
}

TEST_CASE("rhs is 2Q") {
  const auto basis = build_basis(4);
  const CurvatureOperator r = random_operator(basis, 3, {RandomMode::GaussianBianchi});
  CHECK((hamilton_rhs(r).mat() - 2.0 * q(r).mat()).norm() < 1e-13 * r.norm() * r.norm());
}

TEST_CASE("sphere trajectory") {
  const CurvatureOperator id = CurvatureOperator::identity(build_basis(3));
  SUBCASE("rk4 matches the closed form") {
    const Trajectory traj = integrate(id, 0.2, SolverConfig{Method::Rk4Fixed, 1e-4});
    CHECK_FALSE(traj.blown_up);
    CHECK(traj.times.back() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(sphere_error(traj, 3, 0.2) < 1e-8);
    const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), 0.1 - 1e-12);
    const std::size_t i = it - traj.times.begin();
    CHECK(traj.ops[i].mat()(0, 0) == doctest::Approx(1.0 / 0.6).epsilon(1e-8));
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      CHECK(traj.scal_track[k] == doctest::Approx(6.0 / (1.0 - 4.0 * traj.times[k])).epsilon(1e-8));
      if (k) CHECK(traj.times[k] > traj.times[k - 1]);
    }
  }
  SUBCASE("adaptive matches the closed form") {
    const Trajectory traj = integrate(id, 0.2, SolverConfig{Method::Rkf45Adaptive, 0.0, 1e-10, 1e-12});
    CHECK(sphere_error(traj, 3, 0.2) < 1e-8);
  }
  SUBCASE("other dimensions") {
    for (int n : {2, 4, 5}) {
      const double t_end = 0.8 / (2.0 * (n - 1));
      const Trajectory traj = integrate(CurvatureOperator::identity(build_basis(n)), t_end, {Method::Rk4Fixed, 1e-5});
      CHECK(sphere_error(traj, n, t_end) < 1e-7);
    }
  }
  SUBCASE("blow-up near 1/4") {
    for (Method m : {Method::Rk4Fixed, Method::Rkf45Adaptive}) {
      SolverConfig cfg{m, 1e-4};
      if (m == Method::Rkf45Adaptive) cfg.step = 0.0;
      const Trajectory traj = integrate(id, 1.0, cfg);
      CHECK(traj.blown_up);
      REQUIRE(traj.blowup_time_estimate.has_value());
      CHECK(*traj.blowup_time_estimate >= 0.24);
      CHECK(*traj.blowup_time_estimate <= 0.26);
      CHECK(traj.times.back() < 0.26);
    }
  }
  SUBCASE("rk4 convergence order") {
    const double e1 = sphere_error(integrate(id, 0.2, {Method::Rk4Fixed, 2e-3}), 3, 0.2);
    const double e2 = sphere_error(integrate(id, 0.2, {Method::Rk4Fixed, 1e-3}), 3, 0.2);
    CHECK(e1 / e2 >= 12.0);
    CHECK(e1 / e2 <= 20.0);
  }
}

TEST_CASE("zero is a fixed point") {
  const CurvatureOperator zero = CurvatureOperator::zero(build_basis(4));
  const Trajectory traj = integrate(zero, 1.0, {Method::Rk4Fixed, 1e-2});
  CHECK_FALSE(traj.blown_up);
  for (const auto& op : traj.ops) CHECK(op.norm() == 0.0);
  CHECK(scal_rate_check(traj) == 0.0);
}

TEST_CASE("scaling symmetry lambda R(lambda t)") {
  const auto basis = build_basis(4);
  const double lambda = 2.5;
  const SolverConfig cfg{Method::Rkf45Adaptive, 0.0, 1e-11, 1e-13};
  SUBCASE("sphere family") {
    const CurvatureOperator id = CurvatureOperator::identity(basis);
    const Trajectory a = integrate(lambda * id, 0.04, cfg);
    const Trajectory b = integrate(id, lambda * 0.04, cfg);
    CHECK((a.ops.back().mat() - lambda * b.ops.back().mat()).norm() / a.ops.back().norm() < 1e-8);
  }
  SUBCASE("random start") {
    const CurvatureOperator r = random_operator(basis, 8, {RandomMode::GaussianBianchi});
    const Trajectory a = integrate(lambda * r, 0.02, cfg);
    const Trajectory b = integrate(r, lambda * 0.02, cfg);
    CHECK((a.ops.back().mat() - lambda * b.ops.back().mat()).norm() / a.ops.back().norm() < 1e-8);
  }
}

TEST_CASE("truncation keeps the partial trajectory") {
  const CurvatureOperator id = CurvatureOperator::identity(build_basis(3));
  SolverConfig cfg{Method::Rk4Fixed, 1e-3};
  cfg.max_steps = 10;
  try {
    integrate(id, 0.2, cfg);
    FAIL("expected TruncationError");
  } catch (const TruncationError& e) {
    CHECK(e.partial().steps == 10);
    CHECK(e.partial().times.size() == 11);
    CHECK(e.partial().times.back() == doctest::Approx(0.01));
  }
}

TEST_CASE("store_every thins the output but keeps the final state") {
  const CurvatureOperator id = CurvatureOperator::identity(build_basis(3));
  SolverConfig cfg{Method::Rk4Fixed, 1e-3};
  cfg.store_every = 7;
  const Trajectory traj = integrate(id, 0.1, cfg);
  CHECK(traj.steps == 100);
  CHECK(traj.times.back() == doctest::Approx(0.1));
  CHECK(traj.times.size() == 16);
}

TEST_CASE("residuals stay small along random trajectories") {
  const auto basis = build_basis(5);
  const CurvatureOperator r = random_operator(basis, 13, {RandomMode::GaussianBianchi});
  const Trajectory traj = integrate(r, 0.05, {Method::Rkf45Adaptive, 0.0, 1e-9, 1e-12});
  CHECK(traj.max_bianchi_residual < 1e-9);
  CHECK(traj.max_symmetry_residual < 1e-9);
  for (const auto& op : traj.ops) CHECK(bianchi_residual(*basis, op.mat()) < 1e-10);
}

TEST_CASE("scal rate identity") {
  SUBCASE("sphere") {
    const CurvatureOperator id = CurvatureOperator::identity(build_basis(3));
    CHECK(scal_rate_check(integrate(id, 0.2, {Method::Rk4Fixed, 1e-3})) < 1e-5);
  }
  SUBCASE("random starts, short horizon") {
    for (int n : {3, 4, 5}) {
      const auto basis = build_basis(n);
      for (std::uint64_t s = 0; s < 4; ++s) {
        const CurvatureOperator r = random_operator(basis, 50 + s, {RandomMode::GaussianBianchi});
        const double horizon = 0.05 / r.norm();
        CHECK(scal_rate_check(integrate(r, horizon, {Method::Rkf45Adaptive, 0.0, 1e-9, 1e-12})) < 1e-4);
      }
    }
  }
  SUBCASE("needs three samples") {
    Trajectory t;
    CHECK_THROWS_AS(scal_rate_check(t), std::invalid_argument);
  }
}

TEST_CASE("scal is nondecreasing when it starts nonnegative") {
  const auto basis = build_basis(4);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const CurvatureOperator r = random_operator(basis, 200 + s, {RandomMode::Psd});
    const Trajectory traj = integrate(r, 0.3 / r.norm(), {Method::Rkf45Adaptive, 0.0, 1e-9, 1e-12});
    for (std::size_t k = 1; k < traj.scal_track.size(); ++k)
      CHECK(traj.scal_track[k] >= traj.scal_track[k - 1] - 1e-12 * std::abs(traj.scal_track[k]));
  }
}

TEST_CASE("invariance probe") {
  InvarianceConfig cfg;
  cfg.n = 4;
  cfg.samples = 20;
  SUBCASE("co stays inside") {
    const InvarianceReport rep = invariance_probe(ConeId::CO, cfg);
    CHECK(rep.violations == 0);
    CHECK(rep.global_min_margin >= -1e-6);
    for (const auto& s : rep.samples) {
      CHECK(s.horizon == doctest::Approx(0.5 * s.blowup_estimate));
      CHECK(s.initial_margin > 0.0);
    }
  }
  SUBCASE("scal margin never drops below its start") {
    const InvarianceReport rep = invariance_probe(ConeId::SCAL, cfg);
    CHECK(rep.violations == 0);
    for (const auto& s : rep.samples) CHECK(s.min_margin >= -1e-9);
  }
  SUBCASE("interior samples stay positive") {
    cfg.boundary_offset = 0.5;
    const InvarianceReport rep = invariance_probe(ConeId::CO, cfg);
    CHECK(rep.global_min_margin > 0.0);
  }
  SUBCASE("horizon fraction is checked") {
    cfg.horizon_fraction = 1.0;
    CHECK_THROWS_AS(invariance_probe(ConeId::CO, cfg), std::invalid_argument);
  }
  SUBCASE("deterministic across thread counts") {
    cfg.samples = 8;
    cfg.threads = 1;
    const InvarianceReport a = invariance_probe(ConeId::CO, cfg);
    cfg.threads = 4;
    const InvarianceReport b = invariance_probe(ConeId::CO, cfg);
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].min_margin == b.samples[i].min_margin);
  }
}
