#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curvop/operator.hpp"

namespace curvop {

enum class ConeId { CO, TWO_CO, IC1, IC2, RIC, SCAL, SEC };

inline constexpr ConeId kAllCones[] = {ConeId::CO,  ConeId::TWO_CO, ConeId::IC1, ConeId::IC2,
                                       ConeId::RIC, ConeId::SCAL,   ConeId::SEC};

/// Lowercase CLI names: co, 2co, ic1, ic2, ric, scal, sec.
std::string_view cone_name(ConeId cone);
std::optional<ConeId> parse_cone(std::string_view name);

enum class OracleKind { Exact, Heuristic };
std::string_view oracle_kind_name(OracleKind kind);
OracleKind oracle_kind(ConeId cone);

class NoConvergenceError : public std::runtime_error {
 public:
  explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Multi-start Riemannian descent settings for the frame-minimizing cones.
struct SearchBudget {
  int starts = 64;
  int iterations = 500;
  std::uint64_t seed = 0x5eedULL;
  double grad_tol = 1e-8;
  int threads = 0;
};

/// Object at which the margin is attained.
///  - CO: one eigenvector of R (column in bivector coordinates)
///  - TWO_CO: two eigenvectors of R
///  - RIC: one unit eigenvector of ric (in R^n)
///  - SCAL: empty
///  - SEC: orthonormal 2-frame in R^n
///  - IC1 / IC2: orthonormal 4-frame in R^{n+1} / R^{n+2}
struct Witness {
  Matrix columns;
};

struct MembershipReport {
  ConeId cone = ConeId::CO;
  bool inside = false;
  double margin = 0.0;
  Witness witness;
  OracleKind oracle_kind = OracleKind::Exact;
};

/// Margin and witness only; `inside` is left to the caller's tolerance.
MembershipReport cone_margin(const CurvatureOperator& r, ConeId cone, const SearchBudget& budget = {});

MembershipReport member(const CurvatureOperator& r, ConeId cone, double tol,
                        const SearchBudget& budget = {});

/// Re-evaluates a witness through the 4-tensor, independently of the search path.
double evaluate_witness(const CurvatureOperator& r, ConeId cone, const Witness& witness);

/// Number of extra ambient directions the cone's extension by zero adds (IC1: 1, IC2: 2).
int extension_dim(ConeId cone);

struct ShiftConfig {
  double tol = 1e-8;
  int max_doublings = 10;
};

/// Smallest k with R + k Id in the cone (negative when R is interior).
/// Closed form for exact cones, bisection on the membership oracle otherwise.
double min_shift(const CurvatureOperator& r, ConeId cone, const ShiftConfig& cfg = {},
                 const SearchBudget& budget = {});

/// Value of the frame form (sectional or isotropic) of R extended by zero,
/// for an orthonormal frame in R^m, m >= n. Gradient w.r.t. the frame entries
/// is written to `grad` when non-null. Exposed for testing.
double frame_form(const CurvatureOperator& r, ConeId cone, const Matrix& frame, Matrix* grad);

struct TangencySample {
  double margin = 0.0;  // at the sampled point
  double slope = 0.0;   // d margin / dh along 2Q(R), normalized by |2Q(R)|
  bool exit = false;
};

struct TangencyReport {
  ConeId cone = ConeId::CO;
  int n = 0;
  std::vector<TangencySample> samples;
  int exits = 0;
  double worst_slope = 0.0;
  int worst_index = -1;
};

struct TangencyConfig {
  int n = 4;
  int samples = 500;
  double tol = 1e-6;
  double boundary_offset = 0.0;  // relative offset into the interior
  std::uint64_t seed = 1;
  SearchBudget budget{};
  int threads = 0;
};

/// First-order invariance test: at near-boundary samples R, estimates the
/// one-sided derivative of the margin along R + h 2Q(R) by Richardson
/// extrapolation and flags samples on the boundary whose margin decreases at
/// first order.
TangencyReport tangency_probe(ConeId cone, const TangencyConfig& cfg);

}  // namespace curvop
