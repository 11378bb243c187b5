#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "curvop/bivector.hpp"

namespace curvop {

class BianchiError : public std::invalid_argument {
 public:
  explicit BianchiError(const std::string& what) : std::invalid_argument(what) {}
};

/// Default relative tolerance for symmetry and Bianchi checks.
inline constexpr double kIdentityTol = 1e-10;

/// Dense 4-index array R_{ijkl} over R^n.
class Tensor4 {
 public:
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int n() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[((i * n_ + j) * n_ + k) * n_ + l]; }
  double operator()(int i, int j, int k, int l) const {
    return data_[((i * n_ + j) * n_ + k) * n_ + l];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int n_;
  std::vector<double> data_;
};

/// Symmetric operator on bivectors satisfying the first Bianchi identity.
class CurvatureOperator {
 public:
  /// Validates symmetry and the Bianchi identity to `tol` relative to the norm.
  CurvatureOperator(BasisPtr basis, Matrix mat, double tol = kIdentityTol);

  static CurvatureOperator identity(BasisPtr basis);
  static CurvatureOperator zero(BasisPtr basis);
  /// Skips validation; the caller guarantees the invariants.
  static CurvatureOperator trusted(BasisPtr basis, Matrix mat);

  const BivectorBasis& basis() const { return *basis_; }
  const BasisPtr& basis_ptr() const { return basis_; }
  const Matrix& mat() const { return mat_; }
  int n() const { return basis_->n(); }
  int dim() const { return basis_->dim(); }

  /// Frobenius norm of the matrix.
  double norm() const { return mat_.norm(); }

  CurvatureOperator operator+(const CurvatureOperator& other) const;
  CurvatureOperator operator-(const CurvatureOperator& other) const;
  CurvatureOperator operator*(double s) const;
  friend CurvatureOperator operator*(double s, const CurvatureOperator& r) { return r * s; }
  /// R + k Id.
  CurvatureOperator shifted(double k) const;

 private:
  CurvatureOperator(BasisPtr basis, Matrix mat, std::nullptr_t);
  BasisPtr basis_;
  Matrix mat_;
};

struct RicciData {
  Matrix ric;
  double scal = 0.0;
  double ric_norm_sq = 0.0;
};

struct Spectrum {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

Spectrum symmetric_spectrum(const Matrix& m);

/// R_{ijkl} = <R(e_i ^ e_j), e_k ^ e_l>.
Tensor4 to_tensor(const BivectorBasis& basis, const Matrix& mat);
inline Tensor4 to_tensor(const CurvatureOperator& r) { return to_tensor(r.basis(), r.mat()); }
/// Reads the (i<j, k<l) block of a tensor back into a matrix.
Matrix from_tensor(const BivectorBasis& basis, const Tensor4& t);

/// Norm of the cyclic sum R_{ijkl} + R_{jkil} + R_{kijl}, relative to |mat| (absolute if mat = 0).
double bianchi_residual(const BivectorBasis& basis, const Matrix& mat);
double symmetry_residual(const Matrix& mat);

/// Orthogonal projection of a symmetric operator onto the Bianchi subspace:
/// subtracts one third of the cyclic sum.
CurvatureOperator bianchi_project(BasisPtr basis, const Matrix& s);

RicciData ricci(const CurvatureOperator& r);

/// Hamilton's bilinear map on symmetric operators, computed from the
/// structure constants: (R # L)_{ab} = 1/2 sum c_{a g e} c_{b d z} R_{g d} L_{e z}.
Matrix sharp(const BivectorBasis& basis, const Matrix& r, const Matrix& l);
Matrix sharp(const CurvatureOperator& r, const CurvatureOperator& l);

/// Q(R) = R^2 + R # R.
CurvatureOperator q(const CurvatureOperator& r);

/// The operator ric ^ id built from the Ricci endomorphism of R.
CurvatureOperator ric_wedge_id(const CurvatureOperator& r);

/// O(n) action: (g.R)(x ^ y, z ^ w) = R(gx ^ gy, gz ^ gw).
CurvatureOperator rotate(const CurvatureOperator& r, const Matrix& g);

/// {"n": n, "mat": [row-major lower triangle]}
nlohmann::json to_json(const CurvatureOperator& r);
CurvatureOperator operator_from_json(const nlohmann::json& j);

}  // namespace curvop
