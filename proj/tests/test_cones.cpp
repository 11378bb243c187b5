#include "doctest.h"

#include "curvop/cones.hpp"
#include "curvop/sampling.hpp"
#include "oracles.hpp"

using namespace curvop;

namespace {

SearchBudget small_budget(std::uint64_t seed = 3) {
  SearchBudget b;
  b.starts = 16;
  b.seed = seed;
  return b;
}

Matrix diag_operator(const BasisPtr& basis, const std::vector<double>& mu) {
  Matrix m = Matrix::Zero(basis->dim(), basis->dim());
  for (int a = 0; a < basis->dim(); ++a) m(a, a) = mu[a];
  return m;
}

}  // namespace

TEST_CASE("names") {
  for (ConeId c : kAllCones) CHECK(parse_cone(cone_name(c)) == c);
  CHECK(cone_name(ConeId::TWO_CO) == "2co");
  CHECK_FALSE(parse_cone("CO").has_value());
  CHECK(oracle_kind(ConeId::SEC) == OracleKind::Heuristic);
  CHECK(oracle_kind(ConeId::RIC) == OracleKind::Exact);
}

TEST_CASE("identity margins") {
  const auto basis = build_basis(4);
  const CurvatureOperator id = CurvatureOperator::identity(basis);
  const double expected[] = {1.0, 2.0, 2.0, 0.0, 3.0, 12.0, 1.0};
  int k = 0;
  for (ConeId c : kAllCones) {
    CAPTURE(cone_name(c));
    const MembershipReport rep = member(id, c, 1e-8);
    CHECK(rep.inside);
    CHECK(rep.margin == doctest::Approx(expected[k++]).epsilon(1e-8));
    CHECK(rep.oracle_kind == oracle_kind(c));
    if (c != ConeId::SCAL) CHECK(evaluate_witness(id, c, rep.witness) == doctest::Approx(rep.margin).epsilon(1e-8));
  }
}

TEST_CASE("ic1 of the identity in dimension 4 is 2") {
  const auto basis = build_basis(4);
  const CurvatureOperator id = CurvatureOperator::identity(basis);
  const Tensor4 t = to_tensor(id);
  // a frame using the appended direction attains 2; internal frames give 4
  Matrix f = Matrix::Zero(5, 4);
  f(0, 0) = f(1, 1) = f(2, 2) = f(4, 3) = 1.0;
  CHECK(oracle::isotropic(t, f) == doctest::Approx(2.0));
  CHECK(oracle::isotropic(t, Matrix::Identity(5, 4)) == doctest::Approx(4.0));
  std::mt19937_64 rng(17);
  double brute = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 20000; ++s) brute = std::min(brute, oracle::isotropic(t, oracle::random_frame(5, 4, rng)));
  CHECK(brute >= 2.0 - 1e-12);
  CHECK(brute < 2.1);
  CHECK(member(id, ConeId::IC1, 1e-8).margin == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("ric margin on a diagonal operator") {
  const auto basis = build_basis(3);
  const CurvatureOperator r(basis, diag_operator(basis, {-0.3, 0.0, 1.0}));
  const MembershipReport rep = member(r, ConeId::RIC, 1e-8);
  CHECK_FALSE(rep.inside);
  CHECK(rep.margin == doctest::Approx(-0.3));
  CHECK(evaluate_witness(r, ConeId::RIC, rep.witness) == doctest::Approx(-0.3));
}

TEST_CASE("preconditions") {
  const auto b2 = build_basis(2);
  const CurvatureOperator id2 = CurvatureOperator::identity(b2);
  CHECK_THROWS_AS(member(id2, ConeId::TWO_CO, 1e-8), DimensionError);
  CHECK_THROWS_AS(member(id2, ConeId::IC1, 1e-8), DimensionError);
  CHECK(member(id2, ConeId::IC2, 1e-8).inside);
  const CurvatureOperator id4 = CurvatureOperator::identity(build_basis(4));
  CHECK_THROWS_AS(member(id4, ConeId::CO, 0.0), std::invalid_argument);
  SearchBudget none;
  none.starts = 0;
  CHECK_THROWS_AS(member(id4, ConeId::SEC, 1e-8, none), std::invalid_argument);
}

TEST_CASE("sectional minimum for n = 3 against a grid") {
  const auto basis = build_basis(3);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const CurvatureOperator r = random_operator(basis, seed, {RandomMode::GaussianBianchi});
    const double grid = oracle::min_sectional_n3(to_tensor(r));
    const double heuristic = member(r, ConeId::SEC, 1e-8).margin;
    CHECK(std::abs(grid - heuristic) < 1e-6);
    // every bivector in dimension 3 is decomposable
    CHECK(std::abs(grid - symmetric_spectrum(r.mat()).values(0)) < 1e-6);
  }
}

TEST_CASE("witnesses reproduce margins") {
  for (int n : {3, 4, 5}) {
    const auto basis = build_basis(n);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const CurvatureOperator r = random_operator(basis, 60 + seed, {RandomMode::GaussianBianchi});
      for (ConeId c : kAllCones) {
        if (c == ConeId::SCAL) continue;
        CAPTURE(n);
        CAPTURE(cone_name(c));
        const MembershipReport rep = member(r, c, 1e-8, small_budget());
        CHECK(std::abs(evaluate_witness(r, c, rep.witness) - rep.margin) < 1e-8);
        if (c == ConeId::SEC || c == ConeId::IC1 || c == ConeId::IC2) {
          const Matrix& f = rep.witness.columns;
          CHECK((f.transpose() * f - Matrix::Identity(f.cols(), f.cols())).norm() < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("frame form gradient matches finite differences") {
  const auto basis = build_basis(4);
  const CurvatureOperator r = random_operator(basis, 5, {RandomMode::GaussianBianchi});
  std::mt19937_64 rng(1);
  for (ConeId c : {ConeId::SEC, ConeId::IC1}) {
    const int m = 4 + extension_dim(c);
    const Matrix f = oracle::random_frame(m, c == ConeId::SEC ? 2 : 4, rng);
    Matrix grad;
    const double v = frame_form(r, c, f, &grad);
    const Tensor4 t = to_tensor(r);
    if (c == ConeId::IC1) CHECK(v == doctest::Approx(oracle::isotropic(t, f)).epsilon(1e-12));
    const double h = 1e-6;
    for (int i = 0; i < f.rows(); ++i)
      for (int j = 0; j < f.cols(); ++j) {
        Matrix fp = f, fm = f;
        fp(i, j) += h;
        fm(i, j) -= h;
        const double fd = (frame_form(r, c, fp, nullptr) - frame_form(r, c, fm, nullptr)) / (2 * h);
        CHECK(std::abs(fd - grad(i, j)) < 1e-6 * std::max(1.0, r.norm()));
      }
  }
}

TEST_CASE("scaling and shift monotonicity") {
  const auto basis = build_basis(4);
  const CurvatureOperator r = random_operator(basis, 12, {RandomMode::GaussianBianchi});
  for (ConeId c : kAllCones) {
    CAPTURE(cone_name(c));
    const double m1 = member(r, c, 1e-8, small_budget()).margin;
    const MembershipReport scaled = member(3.0 * r, c, 1e-8, small_budget());
    CHECK(scaled.margin == doctest::Approx(3.0 * m1).epsilon(1e-7));
    CHECK(scaled.inside == member(r, c, 1e-8, small_budget()).inside);
    double prev = -std::numeric_limits<double>::infinity();
    for (double k : {-1.0, -0.5, 0.0, 0.25, 1.0, 2.0}) {
      const double m = member(r.shifted(k), c, 1e-8, small_budget()).margin;
      CHECK(m >= prev - 1e-9);
      prev = m;
    }
  }
}

TEST_CASE("min_shift closed forms") {
  const auto basis = build_basis(4);
  const CurvatureOperator id = CurvatureOperator::identity(basis);
  CHECK(min_shift(id, ConeId::CO) == doctest::Approx(-1.0));
  CHECK(min_shift(id, ConeId::TWO_CO) == doctest::Approx(-1.0));
  CHECK(min_shift(id, ConeId::RIC) == doctest::Approx(-1.0));
  CHECK(min_shift(id, ConeId::SCAL) == doctest::Approx(-1.0));
  CHECK(min_shift(id, ConeId::SEC) == doctest::Approx(-1.0).epsilon(1e-7));
  const CurvatureOperator d(basis, diag_operator(basis, {-2.0, 1.0, 3.0, 0.5, 0.0, 4.0}));
  CHECK(min_shift(d, ConeId::CO) == doctest::Approx(2.0));

  for (ConeId c : kAllCones) {
    const CurvatureOperator r = random_operator(basis, 77, {RandomMode::GaussianBianchi});
    const double k = min_shift(r, c, {}, small_budget());
    CAPTURE(cone_name(c));
    CHECK(member(r.shifted(k + 1e-6), c, 1e-8, small_budget()).inside);
    CHECK_FALSE(member(r.shifted(k - 1e-3), c, 1e-8, small_budget()).inside);
  }
}

TEST_CASE("min_shift for ic1 against an independent frame search") {
  const auto basis = build_basis(4);
  const CurvatureOperator r = random_operator(basis, 21, {RandomMode::GaussianBianchi});
  const ShiftConfig cfg{1e-8, 10};
  const double k = min_shift(r, ConeId::IC1, cfg);

  // k* = sup over frames of -form_R(F) / form_Id(F)
  const Tensor4 tr = to_tensor(r), ti = to_tensor(CurvatureOperator::identity(basis));
  auto ratio = [&](const Matrix& f) {
    const double d = oracle::isotropic(ti, f);
    return d > 1e-9 ? -oracle::isotropic(tr, f) / d : -std::numeric_limits<double>::infinity();
  };
  std::mt19937_64 rng(99);
  std::vector<std::pair<double, Matrix>> seeds;
  for (int s = 0; s < 4000; ++s) {
    Matrix f = oracle::random_frame(5, 4, rng);
    seeds.emplace_back(ratio(f), f);
  }
  std::partial_sort(seeds.begin(), seeds.begin() + 8, seeds.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < 8; ++s) best = std::max(best, oracle::givens_ascent(ratio, seeds[s].second));
  CHECK(std::abs(best - k) < 10 * cfg.tol);
}

TEST_CASE("psd operators lie in every cone") {
  for (int n : {3, 4, 5}) {
    const auto basis = build_basis(n);
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const CurvatureOperator r = random_operator(basis, 300 + seed, {RandomMode::Psd});
      for (ConeId c : kAllCones) {
        CAPTURE(n);
        CAPTURE(seed);
        CAPTURE(cone_name(c));
        CHECK(member(r, c, 1e-8, small_budget(seed)).inside);
      }
    }
  }
}

TEST_CASE("co members lie in the larger cones") {
  const auto basis = build_basis(4);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const CurvatureOperator r = random_operator(basis, 700 + seed, {RandomMode::NearConeBoundary, ConeId::CO, 1e-3});
    REQUIRE(member(r, ConeId::CO, 1e-8).inside);
    for (ConeId c : {ConeId::TWO_CO, ConeId::IC1, ConeId::IC2, ConeId::RIC, ConeId::SCAL}) {
      CAPTURE(seed);
      CAPTURE(cone_name(c));
      CHECK(member(r, c, 1e-8, small_budget(seed)).inside);
    }
  }
}

TEST_CASE("multi-start search is deterministic across thread counts") {
  const auto basis = build_basis(5);
  const CurvatureOperator r = random_operator(basis, 4, {RandomMode::GaussianBianchi});
  SearchBudget one = small_budget(), many = small_budget();
  one.threads = 1;
  many.threads = 4;
  for (ConeId c : {ConeId::SEC, ConeId::IC1, ConeId::IC2}) {
    const MembershipReport a = member(r, c, 1e-8, one), b = member(r, c, 1e-8, many);
    CHECK(a.margin == b.margin);
    CHECK(a.witness.columns == b.witness.columns);
  }
}

TEST_CASE("tangency probe") {
  TangencyConfig cfg;
  cfg.n = 4;
  cfg.samples = 500;
  SUBCASE("co has no first-order exits") {
    const TangencyReport rep = tangency_probe(ConeId::CO, cfg);
    CHECK(rep.samples.size() == 500);
    CHECK(rep.exits == 0);
  }
  SUBCASE("ric has first-order exits in dimension 4") {
    cfg.samples = 200;
    const TangencyReport rep = tangency_probe(ConeId::RIC, cfg);
    CHECK(rep.exits > 0);
    CHECK(rep.worst_slope < -cfg.tol);
    REQUIRE(rep.worst_index >= 0);
    CHECK(rep.samples[rep.worst_index].exit);
  }
  SUBCASE("interior samples are never exits") {
    cfg.samples = 100;
    cfg.boundary_offset = 0.5;
    for (ConeId c : {ConeId::CO, ConeId::RIC}) CHECK(tangency_probe(c, cfg).exits == 0);
  }
}
