#pragma once

// Kronecker algebra and (half-)vectorization.
//
// Storage convention: every vec/reshape in this library is column-major,
// vec(A) = [A11, A21, ..., Ad1, A12, ..., Add]. Eigen's default storage is
// column-major too, so vec() is a plain copy of the coefficient array.

#include <Eigen/Dense>

#include <cstddef>
#include <memory>

namespace sepcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Largest Kronecker product dimension materialized outside tests.
inline constexpr Index kDefaultKronCap = 64;

// Relative asymmetry tolerance ||A - A^T||_F <= tol * ||A||_F.
inline constexpr double kSymmetryTol = 1e-10;

// A (x) B. Throws kSizeCap when max(rows, cols) of the result exceeds
// `max_dim`; pass a larger cap explicitly in dense oracles.
Matrix kron(const Matrix& a, const Matrix& b, Index max_dim = kDefaultKronCap);

Vector vec(const Matrix& a);
Matrix unvec(const Vector& v, Index rows, Index cols);

bool is_symmetric(const Matrix& a, double tol = kSymmetryTol);

// Lower-triangular column stacking. Throws kNotSymmetric.
Vector vech(const Matrix& a);
// Inverse of vech; the dimension is inferred from the length.
Matrix unvech(const Vector& v);

inline Index vech_size(Index d) { return d * (d + 1) / 2; }

// (A + A^T) / 2.
Matrix symm(const Matrix& a);

struct DuplicationPair {
  Index d = 0;
  Matrix D;      // d^2 x d(d+1)/2, vec(S) = D vech(S)
  Matrix Dplus;  // (D^T D)^{-1} D^T
};

// Cached per dimension; the returned object is immutable and shareable.
std::shared_ptr<const DuplicationPair> duplication(Index d);

// K(m, n) vec(A) = vec(A^T) for A of size m x n. Cached.
std::shared_ptr<const Matrix> commutation(Index m, Index n);

// D^T vec(A) for square A, without forming D: diagonal entries once,
// off-diagonal (i, j) entries as A_ij + A_ji.
Vector duplication_transpose_times_vec(const Matrix& a);

// y^T (A (x) B) y as tr(A M^T B M), M the d2 x d1 reshape of y.
double kron_quadratic_form(const Vector& y, const Matrix& a, const Matrix& b);

}  // namespace sepcov
