#pragma once

#include <cmath>
#include <functional>

#include "sepcov/kron.hpp"
#include "sepcov/random.hpp"

namespace sepcov::testing {

inline Matrix random_symmetric(Index d, Rng& rng) {
  const Matrix a = standard_normal_matrix(d, d, rng);
  return 0.5 * (a + a.transpose());
}

// Well-conditioned SPD matrix with eigenvalues spread over roughly [0.3, 3].
inline Matrix random_spd(Index d, Rng& rng) {
  const Matrix a = standard_normal_matrix(d, d, rng);
  const Matrix m = a * a.transpose() / static_cast<double>(d) + 0.3 * Matrix::Identity(d, d);
  return 0.5 * (m + m.transpose());
}

// Symmetric basis matrix for vech coordinate (i, j), i >= j.
inline Matrix sym_basis(Index d, Index i, Index j) {
  Matrix e = Matrix::Zero(d, d);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

// Central differences of f along every symmetric basis direction at x,
// next to the analytic directional derivatives tr(G X_p).
struct FdComparison {
  Vector analytic;
  Vector numeric;
  double rel_error() const {
    return (analytic - numeric).cwiseAbs().maxCoeff() / numeric.cwiseAbs().maxCoeff();
  }
};

inline FdComparison fd_compare(const std::function<double(const Matrix&)>& f, const Matrix& x,
                               const Matrix& grad, double h = 1e-5) {
  const Index d = x.rows();
  FdComparison out{Vector(vech_size(d)), Vector(vech_size(d))};
  Index p = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i, ++p) {
      const Matrix e = sym_basis(d, i, j);
      out.numeric(p) = (f(x + h * e) - f(x - h * e)) / (2.0 * h);
      out.analytic(p) = (grad * e).trace();
    }
  }
  return out;
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace sepcov::testing
