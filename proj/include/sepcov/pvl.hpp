#pragma once

// Pitsianis-Van Loan decomposition of a scatter matrix into a sum of
// Kronecker products, sum_k A_k (x) B_k.

#include "sepcov/kron.hpp"

#include <vector>

namespace sepcov {

struct ScatterMatrix {
  Matrix s;     // sum_i y_i y_i^T
  Index n = 0;  // observation count
};

// Rows of `observations` are the y_i (length d1*d2 each). Throws kEmptyData.
ScatterMatrix scatter(const Matrix& observations);

// d1^2 x d2^2 rearrangement: S is a d1 x d1 grid of d2 x d2 blocks S_ij and
// row i + j*d1 of the result is vec(S_ij)^T, so R(A (x) B) = vec(A) vec(B)^T.
Matrix rearrange(const Matrix& s, Index d1, Index d2);

struct KronTerm {
  Matrix a;  // d1 x d1, carries the singular value
  Matrix b;  // d2 x d2, unit Frobenius norm
};

// `terms` are symmetric (x) symmetric and carry everything the likelihood
// needs. `skew_terms` are skew (x) skew; tr(S^-1 A) vanishes for them, so they
// only matter for reconstructing the scatter.
class PvlTerms {
 public:
  PvlTerms(Index d1, Index d2, std::vector<KronTerm> terms,
           std::vector<KronTerm> skew_terms = {});

  Index d1() const { return d1_; }
  Index d2() const { return d2_; }
  Index rank() const { return static_cast<Index>(terms_.size()); }
  const std::vector<KronTerm>& terms() const { return terms_; }
  Index skew_rank() const { return static_cast<Index>(skew_terms_.size()); }
  const std::vector<KronTerm>& skew_terms() const { return skew_terms_; }

  // sum_k A_k (x) B_k, dense (for checks only).
  Matrix reconstruct(Index max_dim = kDefaultKronCap) const;

 private:
  Index d1_;
  Index d2_;
  std::vector<KronTerm> terms_;
  std::vector<KronTerm> skew_terms_;
};

inline constexpr double kDefaultPvlTol = 1e-12;

// SVD of rearrange(S); terms with sigma_k <= tol * sigma_1 are dropped.
// Reconstruction is verified when d1*d2 <= kDefaultKronCap.
PvlTerms pvl_decompose(const ScatterMatrix& s, Index d1, Index d2, double tol = kDefaultPvlTol);

}  // namespace sepcov
