#include "curvop/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvop/ode.hpp"
#include "curvop/sampling.hpp"

namespace curvop {

bool SelftestResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const SelftestCheck& c) { return c.passed; });
}

std::string SelftestResult::first_failure() const {
  for (const auto& c : checks)
    if (!c.passed) return c.name;
  return {};
}

namespace {

SelftestCheck finish(std::string name, double worst, double tol, std::string detail = {}) {
  SelftestCheck c;
  c.name = std::move(name);
  c.value = worst;
  c.passed = std::isfinite(worst) && worst <= tol;
  c.detail = std::move(detail);
  return c;
}

}  // namespace

SelftestResult run_selftest(const SelftestOptions& options) {
  if (options.n_min < 2 || options.n_max < options.n_min) {
    throw std::invalid_argument("selftest: need 2 <= n_min <= n_max");
  }
  SelftestResult result;

  // R + R # Id = ric ^ id
  {
    double worst = 0.0;
    int worst_n = 0;
    for (int n = std::max(3, options.n_min); n <= options.n_max; ++n) {
      const BasisPtr basis = build_basis(n);
      const CurvatureOperator id = CurvatureOperator::identity(basis);
      for (int k = 0; k < options.random_operators; ++k) {
        const CurvatureOperator r = random_operator(basis, 1000 * n + k, {RandomMode::GaussianBianchi});
        const Matrix lhs = r.mat() + options.sharp_scale * sharp(r, id);
        const double res = (lhs - ric_wedge_id(r).mat()).norm() / r.norm();
        if (res > worst) {
          worst = res;
          worst_n = n;
        }
      }
    }
    result.checks.push_back(finish("bw-identity", worst, options.tol, "worst n=" + std::to_string(worst_n)));
  }

  // q(Id) = (n-1) Id via Id^2 + Id # Id
  {
    double worst = 0.0;
    for (int n = options.n_min; n <= options.n_max; ++n) {
      const BasisPtr basis = build_basis(n);
      const CurvatureOperator id = CurvatureOperator::identity(basis);
      const Matrix qid = id.mat() * id.mat() + options.sharp_scale * sharp(id, id);
      worst = std::max(worst, (qid - (n - 1.0) * id.mat()).norm() / id.norm());
    }
    result.checks.push_back(finish("q-identity", worst, 1e-12));
  }

  {
    double worst = 0.0;
    for (int n = options.n_min; n <= options.n_max; ++n) {
      const double scal = ricci(CurvatureOperator::identity(build_basis(n))).scal;
      worst = std::max(worst, std::abs(scal - n * (n - 1.0)) / (n * (n - 1.0)));
    }
    result.checks.push_back(finish("scal-identity", worst, 1e-12));
  }

  // R(t) = Id / (1 - 4t) for n = 3
  {
    const CurvatureOperator id = CurvatureOperator::identity(build_basis(3));
    const Trajectory traj = integrate(id, 0.2, SolverConfig{Method::Rk4Fixed, 1e-4});
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const double f = 1.0 / (1.0 - 4.0 * traj.times[i]);
      worst = std::max(worst, (traj.ops[i].mat() - f * id.mat()).norm() / (f * id.norm()));
    }
    if (traj.blown_up) worst = std::numeric_limits<double>::infinity();
    result.checks.push_back(finish("sphere-trajectory", worst, 1e-8));
  }

  {
    double worst = 0.0;
    for (int n = options.n_min; n <= options.n_max; ++n) {
      const BasisPtr basis = build_basis(n);
      Rng rng(77 + n);
      const Matrix g = gaussian_matrix(basis->dim(), basis->dim(), rng);
      const Matrix s = 0.5 * (g + g.transpose());
      const CurvatureOperator once = bianchi_project(basis, s);
      const CurvatureOperator twice = bianchi_project(basis, once.mat());
      worst = std::max(worst, (twice.mat() - once.mat()).norm() / std::max(once.norm(), 1e-300));
    }
    result.checks.push_back(finish("projection-idempotence", worst, 1e-12));
  }
  return result;
}

}  // namespace curvop
