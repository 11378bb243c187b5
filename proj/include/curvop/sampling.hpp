#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "curvop/cones.hpp"
#include "curvop/parallel.hpp"

namespace curvop {

enum class RandomMode { GaussianBianchi, Psd, NearConeBoundary };

std::string_view random_mode_name(RandomMode mode);
std::optional<RandomMode> parse_random_mode(std::string_view name);

struct RandomSpec {
  RandomMode mode = RandomMode::GaussianBianchi;
  ConeId cone = ConeId::CO;  // NearConeBoundary only
  double delta = 1e-3;       // NearConeBoundary: interior offset relative to |R_boundary|
};

/// Deterministic in (n, seed, spec).
///  - GaussianBianchi: Bianchi projection of a symmetric Gaussian matrix.
///  - Psd: Bianchi projection of A A^T / N, shifted up until it is PSD.
///  - NearConeBoundary: unit-norm Gaussian R moved onto the cone boundary with
///    min_shift, then pushed inside by delta |R_b| Id.
CurvatureOperator random_operator(const BasisPtr& basis, std::uint64_t seed, const RandomSpec& spec,
                                  const SearchBudget& budget = {});

CurvatureOperator random_bianchi(const BasisPtr& basis, Rng& rng);
CurvatureOperator random_psd(const BasisPtr& basis, Rng& rng);

/// Haar-distributed element of O(n) (QR of a Gaussian matrix with sign fix).
Matrix random_orthogonal(int n, Rng& rng);
Matrix gaussian_matrix(int rows, int cols, Rng& rng);

}  // namespace curvop
