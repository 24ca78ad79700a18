#include "sepcov/metric.hpp"

#include "sepcov/error.hpp"

#include <cmath>
#include <string>
#include <type_traits>

namespace sepcov {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Entry p of vech coordinates <-> (row, col) with row >= col.
struct VechIndex {
  Index row;
  Index col;
};

std::vector<VechIndex> vech_indices(Index d) {
  std::vector<VechIndex> idx;
  idx.reserve(static_cast<std::size_t>(vech_size(d)));
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < d; ++i) idx.push_back({i, j});
  }
  return idx;
}

}  // namespace

void validate_metric(const MetricKind& kind) {
  std::visit(Overloaded{
                 [](const Regularized& r) {
                   if (!(r.alpha >= 0.0 && r.alpha < 1.0)) {
                     throw Error(ErrorCode::kInvalidArgument,
                                 "regularized metric requires 0 <= alpha < 1");
                   }
                 },
                 [](const Weighted& w) {
                   if (!(w.omega > 0.0 && w.omega < 1.0)) {
                     throw Error(ErrorCode::kInvalidArgument,
                                 "weighted metric requires 0 < omega < 1");
                   }
                 },
                 [](const auto&) {},
             },
             kind);
}

const char* metric_name(const MetricKind& kind) {
  return std::visit(Overloaded{
                        [](const Regularized&) { return "regularized"; },
                        [](const Orthogonalized&) { return "orthogonalized"; },
                        [](const Weighted&) { return "weighted"; },
                        [](const Product&) { return "product"; },
                    },
                    kind);
}

bool is_constrained(const MetricKind& kind) {
  return std::holds_alternative<Orthogonalized>(kind) || std::holds_alternative<Weighted>(kind);
}

BlockWeights block_weights(const MetricKind& kind, Index d1, Index d2) {
  const double x1 = static_cast<double>(d1);
  const double x2 = static_cast<double>(d2);
  return std::visit(Overloaded{
                        [&](const Regularized& r) { return BlockWeights{x2, x1, r.alpha}; },
                        [&](const Orthogonalized&) { return BlockWeights{x2, x1, 0.0}; },
                        [&](const Weighted& w) {
                          return BlockWeights{w.omega * x2 + 1.0 - w.omega,
                                              w.omega * x1 + 1.0 - w.omega, 0.0};
                        },
                        [&](const Product&) { return BlockWeights{1.0, 1.0, 0.0}; },
                    },
                    kind);
}

Matrix project_tangent(const SpdMatrix& sigma2, const Matrix& v2) {
  if (v2.rows() != sigma2.dim() || v2.cols() != sigma2.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "project_tangent: dimension mismatch");
  }
  const double t = (sigma2.inverse() * v2).trace() / static_cast<double>(sigma2.dim());
  return symm(v2 - t * sigma2.matrix());
}

double metric_inner(const MetricKind& kind, const SeparableState& state, const TangentPair& a,
                    const TangentPair& b) {
  const BlockWeights w = block_weights(kind, state.d1(), state.d2());
  // Whitened tangents keep |v|^2 a sum of squares even when a factor is
  // badly conditioned.
  const Matrix h1 = inv_sqrtm(state.sigma1);
  const Matrix h2 = inv_sqrtm(state.sigma2);
  const Matrix a1 = h1 * a.v1 * h1;
  const Matrix b1 = h1 * b.v1 * h1;
  const Matrix a2 = h2 * a.v2 * h2;
  const Matrix b2 = h2 * b.v2 * h2;
  double out = w.w1 * (a1.array() * b1.array()).sum() + w.w2 * (a2.array() * b2.array()).sum();
  if (w.cross != 0.0) {
    out += w.cross * (a1.trace() * b2.trace() + a2.trace() * b1.trace());
  }
  return out;
}

double kinetic_energy(const MetricKind& kind, const SeparableState& state, const TangentPair& v) {
  return 0.5 * metric_inner(kind, state, v, v);
}

Matrix vech_congruence(const Matrix& a) {
  const Index d = a.rows();
  const auto idx = vech_indices(d);
  const Index m = static_cast<Index>(idx.size());
  Matrix out(m, m);
  // tr(A X A Y) with X, Y symmetric basis matrices; for X = e_a e_b^T and
  // Y = e_c e_e^T the trace is A(e, a) * A(b, c).
  auto term = [&](Index xa, Index xb, const VechIndex& y) {
    double s = a(y.col, xa) * a(xb, y.row);
    if (y.row != y.col) s += a(y.row, xa) * a(xb, y.col);
    return s;
  };
  for (Index p = 0; p < m; ++p) {
    for (Index q = 0; q <= p; ++q) {
      const VechIndex& x = idx[p];
      double s = term(x.row, x.col, idx[q]);
      if (x.row != x.col) s += term(x.col, x.row, idx[q]);
      out(p, q) = s;
      out(q, p) = s;
    }
  }
  return out;
}

Matrix build_metric_tensor(const MetricKind& kind, const SeparableState& state, Index max_dim) {
  const Index m1 = vech_size(state.d1());
  const Index m2 = vech_size(state.d2());
  if (m1 + m2 > max_dim) {
    throw Error(ErrorCode::kSizeCap, "build_metric_tensor: " + std::to_string(m1 + m2) +
                                         " coordinates exceed the cap");
  }
  const BlockWeights w = block_weights(kind, state.d1(), state.d2());
  const Matrix inv1 = state.sigma1.inverse();
  const Matrix inv2 = state.sigma2.inverse();
  Matrix g = Matrix::Zero(m1 + m2, m1 + m2);
  g.topLeftCorner(m1, m1) = w.w1 * vech_congruence(inv1);
  g.bottomRightCorner(m2, m2) = w.w2 * vech_congruence(inv2);
  if (w.cross != 0.0) {
    const Vector u1 = duplication_transpose_times_vec(inv1);
    const Vector u2 = duplication_transpose_times_vec(inv2);
    g.topRightCorner(m1, m2) = w.cross * u1 * u2.transpose();
    g.bottomLeftCorner(m2, m1) = w.cross * u2 * u1.transpose();
  }
  return g;
}

Vector stack_vech(const TangentPair& v) {
  const Vector a = vech(v.v1);
  const Vector b = vech(v.v2);
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

TangentPair unstack_vech(const Vector& x, Index d1, Index d2) {
  const Index m1 = vech_size(d1);
  if (x.size() != m1 + vech_size(d2)) {
    throw Error(ErrorCode::kDimensionMismatch, "unstack_vech: wrong length");
  }
  return TangentPair{unvech(x.head(m1)), unvech(x.tail(x.size() - m1))};
}

namespace {

Eigen::LLT<Matrix> factor_metric(const MetricKind& kind, const SeparableState& state) {
  Eigen::LLT<Matrix> llt(build_metric_tensor(kind, state));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "metric tensor is not positive definite (alpha too close to 1?)");
  }
  return llt;
}

}  // namespace

TangentPair sample_velocity(const MetricKind& kind, const SeparableState& state, Rng& rng) {
  const Index d1 = state.d1();
  const Index d2 = state.d2();
  if (std::holds_alternative<Regularized>(kind)) {
    // v = L^-T z has covariance (L L^T)^-1.
    const auto llt = factor_metric(kind, state);
    const Vector z = standard_normal_vector(vech_size(d1) + vech_size(d2), rng);
    const Vector x = llt.matrixU().solve(z);
    return unstack_vech(x, d1, d2);
  }
  const BlockWeights w = block_weights(kind, d1, d2);
  const Matrix a1 = standard_normal_matrix(d1, d1, rng);
  const Matrix a2 = standard_normal_matrix(d2, d2, rng);
  const Matrix h1 = sqrtm(state.sigma1);
  const Matrix h2 = sqrtm(state.sigma2);
  TangentPair v{symm(h1 * a1 * h1) / std::sqrt(w.w1), symm(h2 * a2 * h2) / std::sqrt(w.w2)};
  if (is_constrained(kind)) v.v2 = project_tangent(state.sigma2, v.v2);
  return v;
}

TangentPair riemannian_grad(const MetricKind& kind, const SeparableState& state,
                            const FactorGradient& euclid) {
  const Index d1 = state.d1();
  const Index d2 = state.d2();
  if (euclid.g1.rows() != d1 || euclid.g2.rows() != d2) {
    throw Error(ErrorCode::kDimensionMismatch, "riemannian_grad: gradient dimension mismatch");
  }
  if (std::holds_alternative<Regularized>(kind)) {
    const auto llt = factor_metric(kind, state);
    Vector rhs(vech_size(d1) + vech_size(d2));
    rhs << duplication_transpose_times_vec(euclid.g1), duplication_transpose_times_vec(euclid.g2);
    return unstack_vech(llt.solve(rhs), d1, d2);
  }
  const BlockWeights w = block_weights(kind, d1, d2);
  const Matrix& s1 = state.sigma1.matrix();
  const Matrix& s2 = state.sigma2.matrix();
  TangentPair out{symm(s1 * euclid.g1 * s1) / w.w1, symm(s2 * euclid.g2 * s2) / w.w2};
  if (is_constrained(kind)) out.v2 = project_tangent(state.sigma2, out.v2);
  return out;
}

double metric_logdet(const MetricKind& kind, const SeparableState& state) {
  const double x1 = static_cast<double>(state.d1());
  const double x2 = static_cast<double>(state.d2());
  double out = -(x1 + 1.0) * state.sigma1.log_det();
  if (!is_constrained(kind)) out -= (x2 + 1.0) * state.sigma2.log_det();
  return out;
}

FactorGradient metric_grad_logdet(const MetricKind& kind, const SeparableState& state) {
  const double x1 = static_cast<double>(state.d1());
  const double x2 = static_cast<double>(state.d2());
  FactorGradient g;
  g.g1 = -(x1 + 1.0) * state.sigma1.inverse();
  if (is_constrained(kind)) {
    g.g2 = Matrix::Zero(state.d2(), state.d2());
  } else {
    g.g2 = -(x2 + 1.0) * state.sigma2.inverse();
  }
  return g;
}

}  // namespace sepcov
