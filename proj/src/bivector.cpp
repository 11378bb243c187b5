#include "curvop/bivector.hpp"

#include <map>
#include <mutex>

namespace curvop {

BivectorBasis::BivectorBasis(int n) : n_(n) {
  if (n < 2) {
    throw DimensionError("bivector basis needs n >= 2, got " + std::to_string(n));
  }
  index_.assign(static_cast<std::size_t>(n) * n, -1);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      index_[i * n + j] = static_cast<int>(pairs_.size());
      pairs_.emplace_back(i, j);
    }
  }
}

int BivectorBasis::index_of(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_ || i >= j) {
    throw DimensionError("index_of expects 0 <= i < j < n");
  }
  return index_[i * n_ + j];
}

std::pair<int, int> BivectorBasis::signed_index(int i, int j) const {
  if (i == j) return {0, 0};
  if (i < j) return {index_[i * n_ + j], 1};
  return {index_[j * n_ + i], -1};
}

Vector BivectorBasis::wedge(const Vector& u, const Vector& v) const {
  Vector b(dim());
  for (int a = 0; a < dim(); ++a) {
    const auto [i, j] = pairs_[a];
    b[a] = u[i] * v[j] - u[j] * v[i];
  }
  return b;
}

Matrix BivectorBasis::to_skew(const Vector& b) const {
  Matrix x = Matrix::Zero(n_, n_);
  for (int a = 0; a < dim(); ++a) {
    const auto [i, j] = pairs_[a];
    x(i, j) = b[a];
    x(j, i) = -b[a];
  }
  return x;
}

Vector BivectorBasis::from_skew(const Matrix& x) const {
  Vector b(dim());
  for (int a = 0; a < dim(); ++a) {
    const auto [i, j] = pairs_[a];
    b[a] = x(i, j);
  }
  return b;
}

Matrix BivectorBasis::lift(const Matrix& g) const {
  // column b is the image of basis element b = e_k ^ e_l, i.e. (g e_k) ^ (g e_l)
  Matrix out(dim(), dim());
  for (int b = 0; b < dim(); ++b) {
    const auto [k, l] = pairs_[b];
    out.col(b) = wedge(g.col(k), g.col(l));
  }
  return out;
}

BasisPtr build_basis(int n) { return std::make_shared<const BivectorBasis>(n); }

StructureConstants::StructureConstants(const BivectorBasis& basis) {
  const int dim = basis.dim();
  std::vector<Matrix> skew(dim);
  for (int a = 0; a < dim; ++a) skew[a] = basis.to_skew(Vector::Unit(dim, a));

  slices_.assign(dim, Matrix::Zero(dim, dim));
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      const Matrix bracket = skew[a] * skew[b] - skew[b] * skew[a];
      // <X, Y> = -tr(XY)/2 equals the plain coefficient pairing of from_skew
      slices_[a].row(b) = basis.from_skew(bracket).transpose();
    }
  }
}

const StructureConstants& structure_constants(const BivectorBasis& basis) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<StructureConstants>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[basis.n()];
  if (!slot) slot = std::make_unique<StructureConstants>(basis);
  return *slot;
}

Matrix wedge_sym(const BivectorBasis& basis, const Matrix& a, const Matrix& b) {
  const int n = basis.n();
  if (a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != n) {
    throw DimensionError("wedge_sym: operands must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  const int dim = basis.dim();
  Matrix out(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const auto [i, j] = basis.pair_of(col);
    const Vector image = 0.5 * (basis.wedge(a.col(i), b.col(j)) + basis.wedge(b.col(i), a.col(j)));
    out.col(col) = image;
  }
  return out;
}

}  // namespace curvop
