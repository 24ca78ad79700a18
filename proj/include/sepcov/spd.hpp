#pragma once

// Affine-invariant geometry of one symmetric positive definite factor.

#include "sepcov/kron.hpp"

#include <utility>

namespace sepcov {

struct Eig {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns matching `values`
};

// Dense SPD matrix. Symmetry (relative 1e-10) and positivity are checked on
// construction and the eigendecomposition is kept, since every matrix
// function and the eigen-based priors reuse it. Immutable.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& m);

  static SpdMatrix identity(Index d) { return SpdMatrix(Matrix::Identity(d, d)); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const Eig& eig() const { return eig_; }

  double log_det() const;
  Matrix inverse() const;
  double min_eigenvalue() const { return eig_.values(eig_.values.size() - 1); }
  double max_eigenvalue() const { return eig_.values(0); }

 private:
  Matrix m_;
  Eig eig_;
};

// Symmetric tangent vector at an SPD point.
class TangentVector {
 public:
  TangentVector() = default;
  explicit TangentVector(const Matrix& v);

  static TangentVector zero(Index d) { return TangentVector(Matrix::Zero(d, d)); }

  Index dim() const { return v_.rows(); }
  const Matrix& matrix() const { return v_; }

 private:
  Matrix v_;
};

// Descending eigenvalues and orthonormal eigenvectors (cached on the matrix).
const Eig& spd_eig(const SpdMatrix& sigma);

// Eigendecomposition of any symmetric matrix, descending. Throws kEigFailure.
Eig symmetric_eig(const Matrix& a);

// Q f(diag) Q^T, symmetrized.
template <typename F>
Matrix spectral_apply(const Eig& e, F&& f) {
  const Vector fv = e.values.unaryExpr(f);
  return symm(e.vectors * fv.asDiagonal() * e.vectors.transpose());
}

Matrix sqrtm(const SpdMatrix& sigma);
Matrix inv_sqrtm(const SpdMatrix& sigma);
Matrix logm(const SpdMatrix& sigma);
// Matrix exponential of a symmetric (not necessarily definite) matrix.
Matrix expm_sym(const Matrix& a);

// tr(S^-1 A S^-1 B)
double affine_inner(const SpdMatrix& sigma, const TangentVector& a, const TangentVector& b);
double affine_inner(const SpdMatrix& sigma, const Matrix& a, const Matrix& b);

// Sigma(t) = S^1/2 exp(t S^-1/2 V S^-1/2) S^1/2
SpdMatrix geodesic_step(const SpdMatrix& sigma0, const TangentVector& v0, double t);
// V(t) = d/dt Sigma(t)
TangentVector velocity_flow(const SpdMatrix& sigma0, const TangentVector& v0, double t);
// Both of the above sharing one decomposition; this is what the integrator uses.
std::pair<SpdMatrix, Matrix> geodesic_flow(const SpdMatrix& sigma0, const Matrix& v0, double t);

// Tangent at sigma0 whose geodesic reaches sigma1 at t = 1.
TangentVector spd_log_map(const SpdMatrix& sigma0, const SpdMatrix& sigma1);

}  // namespace sepcov
