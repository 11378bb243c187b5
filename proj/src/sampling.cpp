#include "curvop/sampling.hpp"

#include <cmath>

namespace curvop {

std::string_view random_mode_name(RandomMode mode) {
  switch (mode) {
    case RandomMode::GaussianBianchi: return "gaussian-bianchi";
    case RandomMode::Psd: return "psd";
    case RandomMode::NearConeBoundary: return "near-cone-boundary";
  }
  return "?";
}

std::optional<RandomMode> parse_random_mode(std::string_view name) {
  for (auto mode : {RandomMode::GaussianBianchi, RandomMode::Psd, RandomMode::NearConeBoundary}) {
    if (random_mode_name(mode) == name) return mode;
  }
  return std::nullopt;
}

Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  // column-major fill order is part of the determinism contract
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Matrix random_orthogonal(int n, Rng& rng) {
  const Matrix g = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix qm = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix rm = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (rm(j, j) < 0) qm.col(j) *= -1.0;
  }
  return qm;
}

CurvatureOperator random_bianchi(const BasisPtr& basis, Rng& rng) {
  const Matrix g = gaussian_matrix(basis->dim(), basis->dim(), rng);
  return bianchi_project(basis, 0.5 * (g + g.transpose()));
}

CurvatureOperator random_psd(const BasisPtr& basis, Rng& rng) {
  const int dim = basis->dim();
  const Matrix a = gaussian_matrix(dim, dim, rng);
  CurvatureOperator r = bianchi_project(basis, a * a.transpose() / dim);
  const double lmin = symmetric_spectrum(r.mat()).values[0];
  if (lmin < 0.0) r = r.shifted(-lmin);
  return r;
}

CurvatureOperator random_operator(const BasisPtr& basis, std::uint64_t seed, const RandomSpec& spec,
                                  const SearchBudget& budget) {
  Rng rng(seed);
  switch (spec.mode) {
    case RandomMode::GaussianBianchi: return random_bianchi(basis, rng);
    case RandomMode::Psd: return random_psd(basis, rng);
    case RandomMode::NearConeBoundary: {
      CurvatureOperator r = random_bianchi(basis, rng);
      r = r * (1.0 / r.norm());
      const double k = min_shift(r, spec.cone, ShiftConfig{}, budget);
      const CurvatureOperator on_boundary = r.shifted(k);
      return on_boundary.shifted(spec.delta * on_boundary.norm());
    }
  }
  throw std::invalid_argument("unknown random operator mode");
}

}  // namespace curvop
