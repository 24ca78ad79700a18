#include "sepcov/kron.hpp"

#include "sepcov/error.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

namespace sepcov {

Matrix kron(const Matrix& a, const Matrix& b, Index max_dim) {
  const Index rows = a.rows() * b.rows();
  const Index cols = a.cols() * b.cols();
  if (std::max(rows, cols) > max_dim) {
    throw Error(ErrorCode::kSizeCap,
                "kron: refusing to materialize a " + std::to_string(rows) +
                    "x" + std::to_string(cols) + " Kronecker product (cap " +
                    std::to_string(max_dim) + ")");
  }
  Matrix out(rows, cols);
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (rows * cols != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "unvec: length does not match rows*cols");
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = a.norm();
  return (a - a.transpose()).norm() <= tol * std::max(scale, 1e-300);
}

Vector vech(const Matrix& a) {
  if (!is_symmetric(a)) {
    throw Error(ErrorCode::kNotSymmetric, "vech: matrix is not symmetric");
  }
  const Index d = a.rows();
  Vector out(vech_size(d));
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) out(k++) = a(i, j);
  }
  return out;
}

Matrix unvech(const Vector& v) {
  // d(d+1)/2 = m  =>  d = (sqrt(8m+1) - 1) / 2
  const Index m = v.size();
  const auto d = static_cast<Index>(std::llround((std::sqrt(8.0 * m + 1.0) - 1.0) / 2.0));
  if (vech_size(d) != m) {
    throw Error(ErrorCode::kDimensionMismatch, "unvech: length is not triangular");
  }
  Matrix out(d, d);
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) {
      out(i, j) = v(k);
      out(j, i) = v(k);
      ++k;
    }
  }
  return out;
}

Matrix symm(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "symm: matrix is not square");
  }
  return 0.5 * (a + a.transpose());
}

namespace {

DuplicationPair build_duplication(Index d) {
  DuplicationPair p;
  p.d = d;
  p.D = Matrix::Zero(d * d, vech_size(d));
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) {
      p.D(i + j * d, k) = 1.0;
      p.D(j + i * d, k) = 1.0;
      ++k;
    }
  }
  // D^T D is diagonal (1 on diagonal slots, 2 off-diagonal).
  const Vector inv_counts = (p.D.transpose() * p.D).diagonal().cwiseInverse();
  p.Dplus = inv_counts.asDiagonal() * p.D.transpose();
  return p;
}

Matrix build_commutation(Index m, Index n) {
  Matrix k = Matrix::Zero(m * n, m * n);
  // vec(A)[i + j*m] = A(i, j); vec(A^T)[j + i*n] = A(i, j)
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) k(j + i * n, i + j * m) = 1.0;
  }
  return k;
}

}  // namespace

std::shared_ptr<const DuplicationPair> duplication(Index d) {
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "duplication: d must be >= 1");
  static std::mutex mu;
  static std::map<Index, std::shared_ptr<const DuplicationPair>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[d];
  if (!slot) slot = std::make_shared<const DuplicationPair>(build_duplication(d));
  return slot;
}

std::shared_ptr<const Matrix> commutation(Index m, Index n) {
  if (m < 1 || n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "commutation: dimensions must be >= 1");
  }
  static std::mutex mu;
  static std::map<std::pair<Index, Index>, std::shared_ptr<const Matrix>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{m, n}];
  if (!slot) slot = std::make_shared<const Matrix>(build_commutation(m, n));
  return slot;
}

Vector duplication_transpose_times_vec(const Matrix& a) {
  const Index d = a.rows();
  Vector out(vech_size(d));
  Index k = 0;
  for (Index j = 0; j < d; ++j) {
    out(k++) = a(j, j);
    for (Index i = j + 1; i < d; ++i) out(k++) = a(i, j) + a(j, i);
  }
  return out;
}

double kron_quadratic_form(const Vector& y, const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || y.size() != a.rows() * b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "kron_quadratic_form: dimension mismatch");
  }
  const Eigen::Map<const Matrix> m(y.data(), b.rows(), a.rows());
  return (a * m.transpose() * b * m).trace();
}

}  // namespace sepcov
