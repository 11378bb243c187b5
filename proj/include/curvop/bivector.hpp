#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace curvop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Orthonormal basis {e_i ^ e_j : i < j} of the bivector space over R^n,
/// ordered lexicographically in (i, j).
///
/// A bivector u ^ v is identified with the skew matrix u v^T - v u^T, so the
/// basis element e_i ^ e_j maps to E_ij - E_ji and the induced inner product
/// on skew matrices is <X, Y> = -tr(XY) / 2.  With this scale the Lie bracket
/// structure constants have unit magnitude and Id # Id = (n - 2) Id.
class BivectorBasis {
 public:
  explicit BivectorBasis(int n);

  int n() const { return n_; }
  int dim() const { return static_cast<int>(pairs_.size()); }

  std::pair<int, int> pair_of(int alpha) const { return pairs_.at(alpha); }
  int index_of(int i, int j) const;

  /// Index and orientation of e_i ^ e_j for any i != j: e_j ^ e_i = -(e_i ^ e_j).
  /// Returns sign 0 when i == j.
  std::pair<int, int> signed_index(int i, int j) const;

  /// Coordinates of u ^ v in the basis.
  Vector wedge(const Vector& u, const Vector& v) const;

  /// Skew n x n matrix of a bivector given in coordinates.
  Matrix to_skew(const Vector& b) const;
  /// Inverse of to_skew; only the strict upper triangle of `x` is read.
  Vector from_skew(const Matrix& x) const;

  /// Induced action of a linear map g of R^n on bivectors: u ^ v -> gu ^ gv.
  Matrix lift(const Matrix& g) const;

  bool operator==(const BivectorBasis& other) const { return n_ == other.n_; }

 private:
  int n_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> index_;  // n*n, -1 on and below the diagonal
};

using BasisPtr = std::shared_ptr<const BivectorBasis>;

BasisPtr build_basis(int n);

/// Structure constants c[a][b][g] = <[X_a, X_b], X_g>, stored densely as one
/// N x N slice per leading index: slice(a)(b, g).
class StructureConstants {
 public:
  explicit StructureConstants(const BivectorBasis& basis);

  int dim() const { return static_cast<int>(slices_.size()); }
  double operator()(int a, int b, int g) const { return slices_[a](b, g); }
  const Matrix& slice(int a) const { return slices_[a]; }

 private:
  std::vector<Matrix> slices_;
};

const StructureConstants& structure_constants(const BivectorBasis& basis);

/// Symmetrized wedge of two symmetric endomorphisms of R^n, acting on bivectors
/// by (a ^ b)(u ^ v) = (au ^ bv + bu ^ av) / 2.
Matrix wedge_sym(const BivectorBasis& basis, const Matrix& a, const Matrix& b);

}  // namespace curvop
