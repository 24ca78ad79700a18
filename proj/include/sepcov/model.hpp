#pragma once

// Matrix-normal likelihood for y_i ~ N(0, Sigma1 (x) Sigma2), its priors,
// synthetic data and the flip-flop MLE.

#include "sepcov/pvl.hpp"
#include "sepcov/random.hpp"
#include "sepcov/spd.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace sepcov {

struct SeparableState {
  SpdMatrix sigma1;
  SpdMatrix sigma2;

  Index d1() const { return sigma1.dim(); }
  Index d2() const { return sigma2.dim(); }
};

// Euclidean gradient with respect to each factor (symmetric matrices, in the
// df = tr(G dSigma) convention).
struct FactorGradient {
  Matrix g1;
  Matrix g2;
};

// Observations are kept only for I/O and tests; every likelihood evaluation
// goes through the cached PVL terms.
class Dataset {
 public:
  // Rows of `observations` are vec(Y_i) with Y_i the d2 x d1 observation.
  static Dataset from_observations(const Matrix& observations, Index d1, Index d2,
                                   double pvl_tol = kDefaultPvlTol);
  // No observations: the posterior is the prior.
  static Dataset empty(Index d1, Index d2);

  Index d1() const { return pvl_.d1(); }
  Index d2() const { return pvl_.d2(); }
  Index n() const { return n_; }
  const PvlTerms& pvl() const { return pvl_; }
  const std::optional<Matrix>& observations() const { return observations_; }
  const std::optional<Matrix>& scatter_matrix() const { return scatter_; }

 private:
  Dataset(PvlTerms pvl, Index n) : pvl_(std::move(pvl)), n_(n) {}

  PvlTerms pvl_;
  Index n_;
  std::optional<Matrix> observations_;
  std::optional<Matrix> scatter_;
};

// Negative log-likelihood with constants dropped:
// (n d2/2) log|S1| + (n d1/2) log|S2| + 1/2 sum_k tr(S1^-1 A_k) tr(S2^-1 B_k)
double nll(const SeparableState& state, const Dataset& data);
FactorGradient nll_grad(const SeparableState& state, const Dataset& data);

// sum_k A_k tr(S2^-1 B_k): the Sigma1 scale statistic, also used by Gibbs and
// the flip-flop iteration. The Sigma2 counterpart swaps roles.
Matrix weighted_scatter_1(const Matrix& sigma2_inv, const PvlTerms& pvl);
Matrix weighted_scatter_2(const Matrix& sigma1_inv, const PvlTerms& pvl);

struct LogDensity {
  double value = 0.0;  // up to an additive constant
  Matrix grad;         // symmetric
};

struct IwPrior {
  double nu;
  Matrix scale;  // T, SPD
};
struct SiwPrior {
  double a;
  double c;  // H = c I
};
// Experimental: propriety of this prior for the separable model is unknown.
struct ReferencePrior {};

using PriorSpec = std::variant<IwPrior, SiwPrior, ReferencePrior>;

void validate_prior(const PriorSpec& prior, Index d);

// IW(d + 2, (gamma/d) I), the conjugate default used for inference.
IwPrior default_iw_prior(Index d, double gamma);
// SIW constants moment-matched to the default IW prior.
double siw_moment_matched_a(Index d);
double siw_moment_matched_c(Index d, double gamma);
SiwPrior moment_matched_siw(Index d, double gamma);

// Minimum relative eigen-gap accepted by the eigen-repulsion priors.
inline constexpr double kEigenGapTol = 1e-8;

LogDensity iw_logpdf_grad(const SpdMatrix& sigma, double nu, const SpdMatrix& scale);
LogDensity siw_logpdf_grad(const SpdMatrix& sigma, double a, double c);
LogDensity reference_logpdf_grad(const SpdMatrix& sigma);
LogDensity prior_logpdf_grad(const PriorSpec& prior, const SpdMatrix& sigma);

// Behaviour of a prior along the scale orbit:
// log p(e^u S) = log p(S) + kappa u - tau(S) (e^-u - 1).
struct ScaleProfile {
  double kappa = 0.0;
  double tau = 0.0;
  Matrix tau_grad;
};
ScaleProfile prior_scale_profile(const PriorSpec& prior, const SpdMatrix& sigma);

// log of int p1(e^u S1) p2(e^-u S2) e^{u (m1 - m2)} du / (p1(S1) p2(S2)) with
// m_i = d_i (d_i + 1) / 2. Adding it to the prior restricted to |Sigma2| = 1
// gives the density of (Sigma1 |Sigma2|^{1/d2}, Sigma2 / |Sigma2|^{1/d2}) under
// the full posterior. When the integral diverges `proper` is false and the
// value is 0.
struct ScaleMarginal {
  double value = 0.0;
  FactorGradient grad;
  bool proper = true;
};
ScaleMarginal scale_marginal(const PriorSpec& prior1, const PriorSpec& prior2,
                             const SeparableState& state);

// log int exp(k u - a (e^-u - 1) - b (e^u - 1)) du for a, b >= 0, with the
// partial derivatives in a and b. nullopt when the integral diverges.
struct OrbitIntegral {
  double value;
  double d_a;
  double d_b;
};
std::optional<OrbitIntegral> orbit_integral(double k, double a, double b);

// -sum_{k<j} log(l_k - l_j) and its gradient -sum_{k<j} (P_k - P_j)/(l_k - l_j)
// with P_k = q_k q_k^T. Throws kNearDegenerateEigenvalues.
LogDensity eigen_repulsion(const SpdMatrix& sigma);
// Same gradient with P_k = sum_i (V^-1)_{ki} Sigma^{i-1}, V the Vandermonde
// matrix of the eigenvalues. Ill-conditioned beyond small d.
Matrix eigen_repulsion_grad_vandermonde(const SpdMatrix& sigma);

// vec(Sigma2^1/2 Z Sigma1^1/2) per observation, Z iid N(0,1) of size d2 x d1.
Dataset sample_matrix_normal(const SeparableState& state, Index n, Rng& rng);

// Bartlett construction on the Wishart of the inverse.
SpdMatrix sample_inverse_wishart(double nu, const SpdMatrix& scale, Rng& rng);

// Ground truth used by the data generator: Sigma_i ~ IW(d_i + 10, (sqrt(gamma)/d_i) I).
SeparableState sample_truth(Index d1, Index d2, double gamma, Rng& rng);

struct FlipFlopResult {
  SeparableState state;  // normalized so that |Sigma2| = 1
  Index iterations = 0;
  bool converged = false;
  std::vector<double> nll_trace;  // one entry per completed iteration
};

// Alternating closed-form updates. When max_iter is reached without
// convergence the best iterate is returned with converged = false.
FlipFlopResult flipflop_mle(const Dataset& data, double tol = 1e-10, Index max_iter = 1000);

// Sigma2 / |Sigma2|^{1/d2} and Sigma1 * |Sigma2|^{1/d2}.
SeparableState normalize_component(const SeparableState& state);

}  // namespace sepcov
