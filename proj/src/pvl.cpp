#include "sepcov/pvl.hpp"

#include "sepcov/error.hpp"

#include <cmath>
#include <utility>

namespace sepcov {

ScatterMatrix scatter(const Matrix& observations) {
  if (observations.rows() == 0 || observations.cols() == 0) {
    throw Error(ErrorCode::kEmptyData, "scatter: no observations");
  }
  if (!observations.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "scatter: non-finite observation");
  }
  ScatterMatrix out;
  out.s = observations.transpose() * observations;
  out.s = symm(out.s);
  out.n = observations.rows();
  return out;
}

Matrix rearrange(const Matrix& s, Index d1, Index d2) {
  if (d1 < 1 || d2 < 1 || s.rows() != d1 * d2 || s.cols() != d1 * d2) {
    throw Error(ErrorCode::kDimensionMismatch, "rearrange: scatter size does not factor as d1*d2");
  }
  Matrix r(d1 * d1, d2 * d2);
  for (Index j = 0; j < d1; ++j) {
    for (Index i = 0; i < d1; ++i) {
      const Matrix block = s.block(i * d2, j * d2, d2, d2);
      r.row(i + j * d1) = vec(block).transpose();
    }
  }
  return r;
}

PvlTerms::PvlTerms(Index d1, Index d2, std::vector<KronTerm> terms,
                   std::vector<KronTerm> skew_terms)
    : d1_(d1), d2_(d2), terms_(std::move(terms)), skew_terms_(std::move(skew_terms)) {
  if (rank() + skew_rank() > std::min(d1 * d1, d2 * d2)) {
    throw Error(ErrorCode::kInvalidArgument, "PvlTerms: more terms than min(d1^2, d2^2)");
  }
  auto check_shapes = [&](const std::vector<KronTerm>& ts) {
    for (const auto& t : ts) {
      if (t.a.rows() != d1 || t.a.cols() != d1 || t.b.rows() != d2 || t.b.cols() != d2) {
        throw Error(ErrorCode::kDimensionMismatch, "PvlTerms: factor has the wrong shape");
      }
    }
  };
  check_shapes(terms_);
  check_shapes(skew_terms_);
}

Matrix PvlTerms::reconstruct(Index max_dim) const {
  Matrix out = Matrix::Zero(d1_ * d2_, d1_ * d2_);
  for (const auto& t : terms_) out += kron(t.a, t.b, max_dim);
  for (const auto& t : skew_terms_) out += kron(t.a, t.b, max_dim);
  return out;
}

namespace {

// Averages R over transposing the row factor and the column factor, which
// keeps exactly the symmetric (x) symmetric component.
Matrix symmetric_component(const Matrix& r, Index d1, Index d2) {
  Matrix out(r.rows(), r.cols());
  for (Index j = 0; j < d1; ++j) {
    for (Index i = 0; i < d1; ++i) {
      for (Index q = 0; q < d2; ++q) {
        for (Index p = 0; p < d2; ++p) {
          out(i + j * d1, p + q * d2) =
              0.25 * (r(i + j * d1, p + q * d2) + r(j + i * d1, p + q * d2) +
                      r(i + j * d1, q + p * d2) + r(j + i * d1, q + p * d2));
        }
      }
    }
  }
  return out;
}

Matrix skew(const Matrix& m) { return 0.5 * (m - m.transpose()); }

void svd_terms(const Matrix& r, Index d1, Index d2, double cutoff, bool symmetric,
               std::vector<KronTerm>& terms, double& dropped_sq) {
  Eigen::BDCSVD<Matrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorCode::kSvdFailure, "pvl_decompose: SVD failed");
  const Vector& sv = svd.singularValues();
  for (Index k = 0; k < sv.size(); ++k) {
    if (!(sv(k) > cutoff) || sv(k) == 0.0) {
      dropped_sq += sv(k) * sv(k);
      continue;
    }
    const Matrix a = unvec(sv(k) * svd.matrixU().col(k), d1, d1);
    const Matrix b = unvec(svd.matrixV().col(k), d2, d2);
    terms.push_back(symmetric ? KronTerm{symm(a), symm(b)} : KronTerm{skew(a), skew(b)});
  }
}

double leading_singular_value(const Matrix& r) {
  if (r.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(r);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace

PvlTerms pvl_decompose(const ScatterMatrix& s, Index d1, Index d2, double tol) {
  const Matrix r = rearrange(s.s, d1, d2);
  // For symmetric S the rearrangement splits exactly into a symmetric (x)
  // symmetric part and a skew (x) skew part. Skew terms have zero trace
  // against any SPD factor, so only the symmetric ones enter the likelihood.
  const Matrix r_sym = symmetric_component(r, d1, d2);
  const Matrix r_skew = r - r_sym;
  const double lead = std::max(leading_singular_value(r_sym), leading_singular_value(r_skew));
  const double cutoff = tol * lead;

  std::vector<KronTerm> terms;
  std::vector<KronTerm> skew_terms;
  double dropped_sq = 0.0;
  svd_terms(r_sym, d1, d2, cutoff, true, terms, dropped_sq);
  if (d1 > 1 && d2 > 1) svd_terms(r_skew, d1, d2, cutoff, false, skew_terms, dropped_sq);
  PvlTerms out(d1, d2, std::move(terms), std::move(skew_terms));

  if (d1 * d2 <= kDefaultKronCap) {
    const double scale = s.s.norm();
    if (scale > 0.0) {
      const double err = (out.reconstruct() - s.s).norm() / scale;
      const double allowed = 1e-9 + std::sqrt(dropped_sq) / scale * (1.0 + 1e-6);
      if (!(err <= allowed)) {
        throw Error(ErrorCode::kSvdFailure, "pvl_decompose: reconstruction check failed");
      }
    }
  }
  return out;
}

}  // namespace sepcov
