#include "sepcov/spd.hpp"

#include "sepcov/error.hpp"

#include <cmath>

namespace sepcov {

Eig symmetric_eig(const Matrix& a) {
  if (!a.allFinite()) throw Error(ErrorCode::kEigFailure, "eigendecomposition of a non-finite matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kEigFailure, "symmetric eigendecomposition did not converge");
  }
  // Eigen returns ascending order.
  Eig e;
  e.values = solver.eigenvalues().reverse();
  e.vectors = solver.eigenvectors().rowwise().reverse();
  return e;
}

SpdMatrix::SpdMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "SpdMatrix: expected a non-empty square matrix");
  }
  if (!m.allFinite()) throw Error(ErrorCode::kNotPositiveDefinite, "SpdMatrix: non-finite entries");
  if (!is_symmetric(m)) throw Error(ErrorCode::kNotSymmetric, "SpdMatrix: matrix is not symmetric");
  m_ = symm(m);
  eig_ = symmetric_eig(m_);
  const double lmax = eig_.values(0);
  const double lmin = eig_.values(eig_.values.size() - 1);
  if (!(lmax > 0.0)) throw Error(ErrorCode::kNotPositiveDefinite, "SpdMatrix: no positive eigenvalue");
  if (lmin <= 0.0) {
    // Rounding-level negativity is absorbed with a tiny ridge; anything
    // larger is a genuine failure.
    if (lmin <= -1e-12 * lmax) {
      throw Error(ErrorCode::kNotPositiveDefinite, "SpdMatrix: matrix is not positive definite");
    }
    m_.diagonal().array() += 1e-12 * lmax;
    eig_.values.array() += 1e-12 * lmax;
    if (!(eig_.values(eig_.values.size() - 1) > 0.0)) {
      throw Error(ErrorCode::kNotPositiveDefinite, "SpdMatrix: jitter did not restore definiteness");
    }
  }
}

double SpdMatrix::log_det() const { return eig_.values.array().log().sum(); }

Matrix SpdMatrix::inverse() const {
  return spectral_apply(eig_, [](double l) { return 1.0 / l; });
}

TangentVector::TangentVector(const Matrix& v) {
  if (v.rows() != v.cols()) throw Error(ErrorCode::kDimensionMismatch, "TangentVector: not square");
  if (!is_symmetric(v)) throw Error(ErrorCode::kNotSymmetric, "TangentVector: not symmetric");
  v_ = symm(v);
}

const Eig& spd_eig(const SpdMatrix& sigma) { return sigma.eig(); }

Matrix sqrtm(const SpdMatrix& sigma) {
  return spectral_apply(sigma.eig(), [](double l) { return std::sqrt(l); });
}

Matrix inv_sqrtm(const SpdMatrix& sigma) {
  return spectral_apply(sigma.eig(), [](double l) { return 1.0 / std::sqrt(l); });
}

Matrix logm(const SpdMatrix& sigma) {
  return spectral_apply(sigma.eig(), [](double l) { return std::log(l); });
}

Matrix expm_sym(const Matrix& a) {
  if (!is_symmetric(a)) throw Error(ErrorCode::kNotSymmetric, "expm_sym: matrix is not symmetric");
  return spectral_apply(symmetric_eig(symm(a)), [](double l) { return std::exp(l); });
}

double affine_inner(const SpdMatrix& sigma, const Matrix& a, const Matrix& b) {
  if (a.rows() != sigma.dim() || b.rows() != sigma.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "affine_inner: dimension mismatch");
  }
  const Matrix inv = sigma.inverse();
  return (inv * a * inv * b).trace();
}

double affine_inner(const SpdMatrix& sigma, const TangentVector& a, const TangentVector& b) {
  return affine_inner(sigma, a.matrix(), b.matrix());
}

std::pair<SpdMatrix, Matrix> geodesic_flow(const SpdMatrix& sigma0, const Matrix& v0, double t) {
  if (v0.rows() != sigma0.dim() || v0.cols() != sigma0.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "geodesic_flow: dimension mismatch");
  }
  const Matrix half = sqrtm(sigma0);
  const Matrix inv_half = inv_sqrtm(sigma0);
  // W = S^-1/2 V S^-1/2 commutes with exp(tW), so V(t) = S^1/2 W exp(tW) S^1/2.
  const Eig w = symmetric_eig(symm(inv_half * v0 * inv_half));
  const Matrix e = spectral_apply(w, [t](double x) { return std::exp(t * x); });
  const Matrix we = spectral_apply(w, [t](double x) { return x * std::exp(t * x); });
  return {SpdMatrix(symm(half * e * half)), symm(half * we * half)};
}

SpdMatrix geodesic_step(const SpdMatrix& sigma0, const TangentVector& v0, double t) {
  return geodesic_flow(sigma0, v0.matrix(), t).first;
}

TangentVector velocity_flow(const SpdMatrix& sigma0, const TangentVector& v0, double t) {
  return TangentVector(geodesic_flow(sigma0, v0.matrix(), t).second);
}

TangentVector spd_log_map(const SpdMatrix& sigma0, const SpdMatrix& sigma1) {
  if (sigma0.dim() != sigma1.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "spd_log_map: dimension mismatch");
  }
  const Matrix half = sqrtm(sigma0);
  const Matrix inv_half = inv_sqrtm(sigma0);
  const Eig inner = symmetric_eig(symm(inv_half * sigma1.matrix() * inv_half));
  if (!(inner.values(inner.values.size() - 1) > 0.0)) {
    throw Error(ErrorCode::kEigFailure, "spd_log_map: whitened target lost definiteness");
  }
  const Matrix lg = spectral_apply(inner, [](double l) { return std::log(l); });
  return TangentVector(symm(half * lg * half));
}

}  // namespace sepcov
