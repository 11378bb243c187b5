#include "curvop/operator.hpp"

#include <cmath>

namespace curvop {

namespace {

void require_same_basis(const CurvatureOperator& a, const CurvatureOperator& b) {
  if (!(a.basis() == b.basis())) {
    throw DimensionError("operators live on different bivector spaces (n=" + std::to_string(a.n()) +
                         " vs n=" + std::to_string(b.n()) + ")");
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

CurvatureOperator::CurvatureOperator(BasisPtr basis, Matrix mat, std::nullptr_t)
    : basis_(std::move(basis)), mat_(std::move(mat)) {}

CurvatureOperator::CurvatureOperator(BasisPtr basis, Matrix mat, double tol)
    : basis_(std::move(basis)), mat_(std::move(mat)) {
  if (!basis_) throw DimensionError("null bivector basis");
  if (mat_.rows() != basis_->dim() || mat_.cols() != basis_->dim()) {
    throw DimensionError("operator matrix must be " + std::to_string(basis_->dim()) + "x" +
                         std::to_string(basis_->dim()));
  }
  if (!mat_.allFinite()) throw BianchiError("operator matrix has non-finite entries");
  if (symmetry_residual(mat_) > tol) throw BianchiError("operator matrix is not symmetric");
  if (bianchi_residual(*basis_, mat_) > tol) {
    throw BianchiError("operator violates the first Bianchi identity");
  }
}

CurvatureOperator CurvatureOperator::identity(BasisPtr basis) {
  const int dim = basis->dim();
  return trusted(std::move(basis), Matrix::Identity(dim, dim));
}

CurvatureOperator CurvatureOperator::zero(BasisPtr basis) {
  const int dim = basis->dim();
  return trusted(std::move(basis), Matrix::Zero(dim, dim));
}

CurvatureOperator CurvatureOperator::trusted(BasisPtr basis, Matrix mat) {
  return CurvatureOperator(std::move(basis), std::move(mat), nullptr);
}

CurvatureOperator CurvatureOperator::operator+(const CurvatureOperator& other) const {
  require_same_basis(*this, other);
  return trusted(basis_, mat_ + other.mat_);
}

CurvatureOperator CurvatureOperator::operator-(const CurvatureOperator& other) const {
  require_same_basis(*this, other);
  return trusted(basis_, mat_ - other.mat_);
}

CurvatureOperator CurvatureOperator::operator*(double s) const { return trusted(basis_, s * mat_); }

CurvatureOperator CurvatureOperator::shifted(double k) const {
  Matrix m = mat_;
  m.diagonal().array() += k;
  return trusted(basis_, std::move(m));
}

Spectrum symmetric_spectrum(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Tensor4 to_tensor(const BivectorBasis& basis, const Matrix& mat) {
  const int n = basis.n();
  Tensor4 t(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto [a, sa] = basis.signed_index(i, j);
      if (sa == 0) continue;
      for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
          const auto [b, sb] = basis.signed_index(k, l);
          if (sb == 0) continue;
          t(i, j, k, l) = sa * sb * mat(a, b);
        }
      }
    }
  }
  return t;
}

Matrix from_tensor(const BivectorBasis& basis, const Tensor4& t) {
  Matrix m(basis.dim(), basis.dim());
  for (int a = 0; a < basis.dim(); ++a) {
    const auto [i, j] = basis.pair_of(a);
    for (int b = 0; b < basis.dim(); ++b) {
      const auto [k, l] = basis.pair_of(b);
      m(a, b) = t(i, j, k, l);
    }
  }
  return m;
}

namespace {

// b_{ijkl} = R_{ijkl} + R_{jkil} + R_{kijl}
Tensor4 cyclic_sum(const Tensor4& t) {
  const int n = t.n();
  Tensor4 b(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) b(i, j, k, l) = t(i, j, k, l) + t(j, k, i, l) + t(k, i, j, l);
  return b;
}

double tensor_norm(const Tensor4& t) {
  double s = 0.0;
  for (double x : t.data()) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double bianchi_residual(const BivectorBasis& basis, const Matrix& mat) {
  const Tensor4 t = to_tensor(basis, mat);
  const double res = tensor_norm(cyclic_sum(t));
  const double scale = tensor_norm(t);
  return scale > 0.0 ? res / scale : res;
}

double symmetry_residual(const Matrix& mat) {
  const double scale = mat.norm();
  const double res = (mat - mat.transpose()).norm();
  return scale > 0.0 ? res / scale : res;
}

CurvatureOperator bianchi_project(BasisPtr basis, const Matrix& s) {
  const Matrix sym = symmetrized(s);
  Tensor4 t = to_tensor(*basis, sym);
  const Tensor4 b = cyclic_sum(t);
  for (std::size_t idx = 0; idx < t.data().size(); ++idx) {
    t.data()[idx] -= b.data()[idx] / 3.0;
  }
  Matrix out = symmetrized(from_tensor(*basis, t));
  return CurvatureOperator::trusted(std::move(basis), std::move(out));
}

RicciData ricci(const CurvatureOperator& r) {
  const BivectorBasis& basis = r.basis();
  const int n = basis.n();
  const Matrix& m = r.mat();
  RicciData out;
  out.ric = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const auto [a, sa] = basis.signed_index(i, j);
        const auto [b, sb] = basis.signed_index(k, j);
        if (sa == 0 || sb == 0) continue;
        acc += sa * sb * m(a, b);
      }
      out.ric(i, k) = acc;
    }
  }
  out.ric = symmetrized(out.ric);
  out.scal = out.ric.trace();
  out.ric_norm_sq = out.ric.squaredNorm();
  return out;
}

Matrix sharp(const BivectorBasis& basis, const Matrix& r, const Matrix& l) {
  const int dim = basis.dim();
  if (r.rows() != dim || r.cols() != dim || l.rows() != dim || l.cols() != dim) {
    throw DimensionError("sharp: operand size does not match the bivector space");
  }
  const StructureConstants& c = structure_constants(basis);
  Matrix out(dim, dim);
  Matrix w(dim, dim);
  for (int b = 0; b < dim; ++b) {
    w.noalias() = r * c.slice(b) * l;
    for (int a = 0; a <= b; ++a) {
      out(a, b) = 0.5 * c.slice(a).cwiseProduct(w).sum();
    }
  }
  for (int b = 0; b < dim; ++b)
    for (int a = b + 1; a < dim; ++a) out(a, b) = out(b, a);
  return out;
}

Matrix sharp(const CurvatureOperator& r, const CurvatureOperator& l) {
  require_same_basis(r, l);
  // R # L is symmetric in (R, L); average the two orders to make that exact
  return 0.5 * (sharp(r.basis(), r.mat(), l.mat()) + sharp(r.basis(), l.mat(), r.mat()));
}

CurvatureOperator q(const CurvatureOperator& r) {
  Matrix out = r.mat() * r.mat() + sharp(r.basis(), r.mat(), r.mat());
  return CurvatureOperator::trusted(r.basis_ptr(), symmetrized(out));
}

CurvatureOperator ric_wedge_id(const CurvatureOperator& r) {
  const RicciData rd = ricci(r);
  const Matrix id = Matrix::Identity(r.n(), r.n());
  return CurvatureOperator::trusted(r.basis_ptr(), symmetrized(wedge_sym(r.basis(), rd.ric, id)));
}

CurvatureOperator rotate(const CurvatureOperator& r, const Matrix& g) {
  if (g.rows() != r.n() || g.cols() != r.n()) throw DimensionError("rotate: g must be n x n");
  const Matrix lifted = r.basis().lift(g);
  return CurvatureOperator::trusted(r.basis_ptr(), symmetrized(lifted.transpose() * r.mat() * lifted));
}

nlohmann::json to_json(const CurvatureOperator& r) {
  std::vector<double> lower;
  lower.reserve(static_cast<std::size_t>(r.dim()) * (r.dim() + 1) / 2);
  for (int i = 0; i < r.dim(); ++i)
    for (int j = 0; j <= i; ++j) lower.push_back(r.mat()(i, j));
  return {{"n", r.n()}, {"mat", lower}};
}

CurvatureOperator operator_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("mat")) {
    throw std::invalid_argument("operator JSON must be an object with fields n and mat");
  }
  if (!j["n"].is_number_integer()) throw std::invalid_argument("operator JSON: n must be an integer");
  if (!j["mat"].is_array()) throw std::invalid_argument("operator JSON: mat must be an array");
  auto basis = build_basis(j["n"].get<int>());
  const int dim = basis->dim();
  const auto& arr = j["mat"];
  if (arr.size() != static_cast<std::size_t>(dim) * (dim + 1) / 2) {
    throw std::invalid_argument("operator JSON: mat must hold " +
                                std::to_string(dim * (dim + 1) / 2) + " lower-triangle entries");
  }
  Matrix m(dim, dim);
  std::size_t idx = 0;
  for (int row = 0; row < dim; ++row) {
    for (int col = 0; col <= row; ++col) {
      if (!arr[idx].is_number()) throw std::invalid_argument("operator JSON: non-numeric entry");
      m(row, col) = m(col, row) = arr[idx++].get<double>();
    }
  }
  return CurvatureOperator(std::move(basis), std::move(m));
}

}  // namespace curvop
