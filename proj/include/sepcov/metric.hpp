#pragma once

// The four Riemannian metrics on P(d1) x P(d2).
//
// Block-weight convention: the Sigma1 block carries d2 and the Sigma2 block
// carries d1 (Weighted interpolates towards 1, Product uses 1 for both).
// Orthogonalized and Weighted live on the |Sigma2| = 1 slice; their Sigma2
// velocities satisfy tr(Sigma2^-1 V2) = 0.

#include "sepcov/model.hpp"

#include <variant>

namespace sepcov {

struct Regularized {
  double alpha = 0.95;  // cross-term weight, [0, 1)
};
struct Orthogonalized {};
struct Weighted {
  double omega = 0.5;  // (0, 1)
};
struct Product {};

using MetricKind = std::variant<Regularized, Orthogonalized, Weighted, Product>;

// Throws kInvalidArgument for alpha outside [0, 1) or omega outside (0, 1).
// The metric functions themselves accept the limiting values so that tests
// can probe them.
void validate_metric(const MetricKind& kind);
const char* metric_name(const MetricKind& kind);
bool is_constrained(const MetricKind& kind);

struct BlockWeights {
  double w1 = 1.0;
  double w2 = 1.0;
  double cross = 0.0;  // coefficient of tr(S1^-1 V1) tr(S2^-1 V2) in |v|^2 / 2
};
BlockWeights block_weights(const MetricKind& kind, Index d1, Index d2);

struct TangentPair {
  Matrix v1;  // symmetric d1 x d1
  Matrix v2;  // symmetric d2 x d2
};

// V2 - (tr(V2 S2^-1) / d2) S2
Matrix project_tangent(const SpdMatrix& sigma2, const Matrix& v2);

// 1/2 |v|^2 under the metric.
double kinetic_energy(const MetricKind& kind, const SeparableState& state, const TangentPair& v);

// Metric inner product <a, b> (no 1/2).
double metric_inner(const MetricKind& kind, const SeparableState& state, const TangentPair& a,
                    const TangentPair& b);

// v ~ N(0, G^-1), restricted to the constraint slice when applicable.
TangentPair sample_velocity(const MetricKind& kind, const SeparableState& state, Rng& rng);

// G^-1 applied to a Euclidean gradient (E1, E2).
TangentPair riemannian_grad(const MetricKind& kind, const SeparableState& state,
                            const FactorGradient& euclid);

// Largest stacked-vech dimension build_metric_tensor accepts by default.
inline constexpr Index kMetricTensorCap = 2000;

// Dense metric G^ = Dbar^T G Dbar in stacked vech coordinates
// [vech(V1); vech(V2)]. The Sigma2 constraint is not imposed here.
Matrix build_metric_tensor(const MetricKind& kind, const SeparableState& state,
                           Index max_dim = kMetricTensorCap);

// D^T (A (x) A) D for symmetric A, assembled entrywise.
Matrix vech_congruence(const Matrix& a);

// log|G| up to a state-independent constant.
double metric_logdet(const MetricKind& kind, const SeparableState& state);
FactorGradient metric_grad_logdet(const MetricKind& kind, const SeparableState& state);

Vector stack_vech(const TangentPair& v);
TangentPair unstack_vech(const Vector& x, Index d1, Index d2);

}  // namespace sepcov
