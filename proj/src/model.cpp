#include "sepcov/model.hpp"

#include "sepcov/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sepcov {

Dataset Dataset::from_observations(const Matrix& observations, Index d1, Index d2,
                                   double pvl_tol) {
  if (observations.cols() != d1 * d2) {
    throw Error(ErrorCode::kDimensionMismatch,
                "dataset: expected " + std::to_string(d1 * d2) + " columns, got " +
                    std::to_string(observations.cols()));
  }
  ScatterMatrix s = scatter(observations);
  Dataset out(pvl_decompose(s, d1, d2, pvl_tol), s.n);
  out.observations_ = observations;
  out.scatter_ = std::move(s.s);
  return out;
}

Dataset Dataset::empty(Index d1, Index d2) {
  if (d1 < 1 || d2 < 1) throw Error(ErrorCode::kInvalidArgument, "dataset: dimensions must be >= 1");
  Dataset out(PvlTerms(d1, d2, {}), 0);
  out.scatter_ = Matrix::Zero(d1 * d2, d1 * d2);
  return out;
}

namespace {

void check_dims(const SeparableState& state, const Dataset& data) {
  if (state.d1() != data.d1() || state.d2() != data.d2()) {
    throw Error(ErrorCode::kDimensionMismatch, "state and dataset dimensions differ");
  }
}

}  // namespace

Matrix weighted_scatter_1(const Matrix& sigma2_inv, const PvlTerms& pvl) {
  Matrix out = Matrix::Zero(pvl.d1(), pvl.d1());
  for (const auto& t : pvl.terms()) out += (sigma2_inv * t.b).trace() * t.a;
  return symm(out);
}

Matrix weighted_scatter_2(const Matrix& sigma1_inv, const PvlTerms& pvl) {
  Matrix out = Matrix::Zero(pvl.d2(), pvl.d2());
  for (const auto& t : pvl.terms()) out += (sigma1_inv * t.a).trace() * t.b;
  return symm(out);
}

double nll(const SeparableState& state, const Dataset& data) {
  check_dims(state, data);
  const double n = static_cast<double>(data.n());
  const double d1 = static_cast<double>(data.d1());
  const double d2 = static_cast<double>(data.d2());
  const Matrix inv1 = state.sigma1.inverse();
  const Matrix inv2 = state.sigma2.inverse();
  double quad = 0.0;
  for (const auto& t : data.pvl().terms()) quad += (inv1 * t.a).trace() * (inv2 * t.b).trace();
  return 0.5 * n * d2 * state.sigma1.log_det() + 0.5 * n * d1 * state.sigma2.log_det() + 0.5 * quad;
}

FactorGradient nll_grad(const SeparableState& state, const Dataset& data) {
  check_dims(state, data);
  const double n = static_cast<double>(data.n());
  const double d1 = static_cast<double>(data.d1());
  const double d2 = static_cast<double>(data.d2());
  const Matrix inv1 = state.sigma1.inverse();
  const Matrix inv2 = state.sigma2.inverse();
  const Matrix w1 = weighted_scatter_1(inv2, data.pvl());
  const Matrix w2 = weighted_scatter_2(inv1, data.pvl());
  FactorGradient g;
  g.g1 = symm(0.5 * n * d2 * inv1 - 0.5 * inv1 * w1 * inv1);
  g.g2 = symm(0.5 * n * d1 * inv2 - 0.5 * inv2 * w2 * inv2);
  return g;
}

void validate_prior(const PriorSpec& prior, Index d) {
  if (const auto* iw = std::get_if<IwPrior>(&prior)) {
    if (!(iw->nu > static_cast<double>(d) - 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "IW prior requires nu > d - 1");
    }
    if (iw->scale.rows() != d || iw->scale.cols() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "IW prior scale has the wrong dimension");
    }
    SpdMatrix check(iw->scale);
    (void)check;
  } else if (const auto* siw = std::get_if<SiwPrior>(&prior)) {
    if (!(siw->a > 0.0) || !(siw->c > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "SIW prior requires a > 0 and c > 0");
    }
  }
}

IwPrior default_iw_prior(Index d, double gamma) {
  const double dd = static_cast<double>(d);
  return IwPrior{dd + 2.0, (gamma / dd) * Matrix::Identity(d, d)};
}

double siw_moment_matched_a(Index d) {
  const double x = static_cast<double>(d);
  return 2.0 + ((2.0 * (x + 2.0) - x - 2.0) * (x + 2.0 - x - 1.0)) /
                   ((x + 2.0) * (x + 1.0) - x * (x + 2.0));
}

double siw_moment_matched_c(Index d, double gamma) {
  const double x = static_cast<double>(d);
  return (std::sqrt(gamma) / x) * (2.0 * (x + 2.0) - x - 2.0) /
         ((x + 2.0) * (x + 1.0) - x * (x + 2.0));
}

SiwPrior moment_matched_siw(Index d, double gamma) {
  return SiwPrior{siw_moment_matched_a(d), siw_moment_matched_c(d, gamma)};
}

LogDensity iw_logpdf_grad(const SpdMatrix& sigma, double nu, const SpdMatrix& scale) {
  const Index d = sigma.dim();
  if (!(nu > static_cast<double>(d) - 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IW prior requires nu > d - 1");
  }
  if (scale.dim() != d) throw Error(ErrorCode::kDimensionMismatch, "IW scale dimension mismatch");
  const double power = 0.5 * (nu + static_cast<double>(d) + 1.0);
  const Matrix inv = sigma.inverse();
  LogDensity out;
  out.value = -power * sigma.log_det() - 0.5 * (scale.matrix() * inv).trace();
  out.grad = symm(-power * inv + 0.5 * inv * scale.matrix() * inv);
  return out;
}

namespace {

void check_eigen_gap(const Vector& lambda) {
  const double tol = kEigenGapTol * lambda(0);
  for (Index k = 0; k + 1 < lambda.size(); ++k) {
    if (!(lambda(k) - lambda(k + 1) > tol)) {
      throw Error(ErrorCode::kNearDegenerateEigenvalues,
                  "eigenvalues too close for the eigen-repulsion prior term");
    }
  }
}

}  // namespace

LogDensity eigen_repulsion(const SpdMatrix& sigma) {
  const Eig& e = sigma.eig();
  check_eigen_gap(e.values);
  const Index d = sigma.dim();
  LogDensity out;
  out.grad = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    const Matrix pk = e.vectors.col(k) * e.vectors.col(k).transpose();
    for (Index j = k + 1; j < d; ++j) {
      const double gap = e.values(k) - e.values(j);
      out.value -= std::log(gap);
      out.grad -= (pk - e.vectors.col(j) * e.vectors.col(j).transpose()) / gap;
    }
  }
  out.grad = symm(out.grad);
  return out;
}

Matrix eigen_repulsion_grad_vandermonde(const SpdMatrix& sigma) {
  const Vector& lambda = sigma.eig().values;
  check_eigen_gap(lambda);
  const Index d = sigma.dim();
  // V(i, k) = lambda_k^i, so row k of V^-1 holds the coefficients of the
  // Lagrange polynomial that is 1 at lambda_k and 0 at the others.
  Matrix v(d, d);
  for (Index k = 0; k < d; ++k) {
    double p = 1.0;
    for (Index i = 0; i < d; ++i) {
      v(i, k) = p;
      p *= lambda(k);
    }
  }
  const Matrix vinv = v.fullPivLu().inverse();
  std::vector<Matrix> powers(static_cast<std::size_t>(d));
  powers[0] = Matrix::Identity(d, d);
  for (Index i = 1; i < d; ++i) powers[i] = powers[i - 1] * sigma.matrix();
  std::vector<Matrix> proj(static_cast<std::size_t>(d), Matrix::Zero(d, d));
  for (Index k = 0; k < d; ++k) {
    for (Index i = 0; i < d; ++i) proj[k] += vinv(k, i) * powers[i];
  }
  Matrix grad = Matrix::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    for (Index j = k + 1; j < d; ++j) grad -= (proj[k] - proj[j]) / (lambda(k) - lambda(j));
  }
  return symm(grad);
}

LogDensity siw_logpdf_grad(const SpdMatrix& sigma, double a, double c) {
  if (!(a > 0.0) || !(c > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "SIW prior requires a > 0 and c > 0");
  }
  LogDensity out = eigen_repulsion(sigma);
  const Matrix inv = sigma.inverse();
  out.value += -0.5 * c * inv.trace() - a * sigma.log_det();
  out.grad += symm(0.5 * c * inv * inv - a * inv);
  return out;
}

LogDensity reference_logpdf_grad(const SpdMatrix& sigma) {
  LogDensity out = eigen_repulsion(sigma);
  out.value -= sigma.log_det();
  out.grad -= sigma.inverse();
  return out;
}

LogDensity prior_logpdf_grad(const PriorSpec& prior, const SpdMatrix& sigma) {
  if (const auto* iw = std::get_if<IwPrior>(&prior)) {
    return iw_logpdf_grad(sigma, iw->nu, SpdMatrix(iw->scale));
  }
  if (const auto* siw = std::get_if<SiwPrior>(&prior)) {
    return siw_logpdf_grad(sigma, siw->a, siw->c);
  }
  return reference_logpdf_grad(sigma);
}

ScaleProfile prior_scale_profile(const PriorSpec& prior, const SpdMatrix& sigma) {
  const double d = static_cast<double>(sigma.dim());
  const double pairs = 0.5 * d * (d - 1.0);
  ScaleProfile out;
  if (const auto* iw = std::get_if<IwPrior>(&prior)) {
    const Matrix inv = sigma.inverse();
    out.kappa = -0.5 * (iw->nu + d + 1.0) * d;
    out.tau = 0.5 * (iw->scale * inv).trace();
    out.tau_grad = symm(-0.5 * inv * iw->scale * inv);
  } else if (const auto* siw = std::get_if<SiwPrior>(&prior)) {
    const Matrix inv = sigma.inverse();
    out.kappa = -siw->a * d - pairs;
    out.tau = 0.5 * siw->c * inv.trace();
    out.tau_grad = symm(-0.5 * siw->c * inv * inv);
  } else {
    out.kappa = -d - pairs;
    out.tau_grad = Matrix::Zero(sigma.dim(), sigma.dim());
  }
  return out;
}

std::optional<OrbitIntegral> orbit_integral(double k, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(k)) {
    throw Error(ErrorCode::kInvalidArgument, "orbit_integral: bad arguments");
  }
  if (a == 0.0 && b == 0.0) return std::nullopt;
  // int c^{k-1} exp(-a/c) dc = a^k Gamma(-k)
  if (b == 0.0) {
    if (!(k < 0.0)) return std::nullopt;
    return OrbitIntegral{a + k * std::log(a) + std::lgamma(-k), 1.0 + k / a, 0.0};
  }
  if (a == 0.0) {
    if (!(k > 0.0)) return std::nullopt;
    return OrbitIntegral{b - k * std::log(b) + std::lgamma(k), 0.0, 1.0 - k / b};
  }
  // Log-concave in u: trapezoid rule on a grid scaled by the curvature at
  // the mode, which converges geometrically for this integrand.
  const double root = std::sqrt(k * k + 4.0 * a * b);
  const double c_mode = k >= 0.0 ? (k + root) / (2.0 * b) : 2.0 * a / (root - k);
  const double u_mode = std::log(c_mode);
  const double sd = 1.0 / std::sqrt(a / c_mode + b * c_mode);
  const double h = sd / 8.0;
  auto f = [&](double u) { return k * u - a * std::exp(-u) - b * std::exp(u); };
  const double f_mode = f(u_mode);
  constexpr double kDrop = 60.0;
  constexpr int kMaxNodes = 200000;
  double sum = 0.0, sum_em = 0.0, sum_ep = 0.0;
  auto add = [&](double u) {
    const double rel = f(u) - f_mode;
    const double w = std::exp(rel);
    sum += w;
    sum_em += w * std::exp(-u);
    sum_ep += w * std::exp(u);
    return rel > -kDrop;
  };
  add(u_mode);
  for (int side : {-1, 1}) {
    for (int i = 1; i <= kMaxNodes; ++i) {
      if (!add(u_mode + side * i * h)) break;
    }
  }
  return OrbitIntegral{f_mode + std::log(h * sum) + a + b, 1.0 - sum_em / sum,
                       1.0 - sum_ep / sum};
}

ScaleMarginal scale_marginal(const PriorSpec& prior1, const PriorSpec& prior2,
                             const SeparableState& state) {
  const ScaleProfile s1 = prior_scale_profile(prior1, state.sigma1);
  const ScaleProfile s2 = prior_scale_profile(prior2, state.sigma2);
  const double d1 = static_cast<double>(state.d1());
  const double d2 = static_cast<double>(state.d2());
  const double k = s1.kappa - s2.kappa + 0.5 * d1 * (d1 + 1.0) - 0.5 * d2 * (d2 + 1.0);
  ScaleMarginal out;
  const auto orbit = orbit_integral(k, s1.tau, s2.tau);
  if (!orbit) {
    out.proper = false;
    out.grad.g1 = Matrix::Zero(state.d1(), state.d1());
    out.grad.g2 = Matrix::Zero(state.d2(), state.d2());
    return out;
  }
  out.value = orbit->value;
  out.grad.g1 = orbit->d_a * s1.tau_grad;
  out.grad.g2 = orbit->d_b * s2.tau_grad;
  return out;
}

Dataset sample_matrix_normal(const SeparableState& state, Index n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "sample_matrix_normal: n must be >= 1");
  const Index d1 = state.d1();
  const Index d2 = state.d2();
  const Matrix half1 = sqrtm(state.sigma1);
  const Matrix half2 = sqrtm(state.sigma2);
  Matrix y(n, d1 * d2);
  for (Index i = 0; i < n; ++i) {
    const Matrix z = standard_normal_matrix(d2, d1, rng);
    y.row(i) = vec(half2 * z * half1).transpose();
  }
  return Dataset::from_observations(y, d1, d2);
}

SpdMatrix sample_inverse_wishart(double nu, const SpdMatrix& scale, Rng& rng) {
  const Index d = scale.dim();
  if (!(nu > static_cast<double>(d) - 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sample_inverse_wishart: requires nu > d - 1");
  }
  // Sigma^-1 ~ W(nu, T^-1) = (L A)(L A)^T with L L^T = T^-1.
  const Matrix l = Eigen::LLT<Matrix>(scale.inverse()).matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) {
    std::chi_squared_distribution<double> chi2(nu - static_cast<double>(i));
    a(i, i) = std::sqrt(chi2(rng));
    for (Index j = 0; j < i; ++j) a(i, j) = normal(rng);
  }
  const Matrix m = l * a;  // lower triangular
  const Matrix minv =
      m.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  return SpdMatrix(symm(minv.transpose() * minv));
}

SeparableState sample_truth(Index d1, Index d2, double gamma, Rng& rng) {
  auto draw = [&](Index d) {
    const double dd = static_cast<double>(d);
    return sample_inverse_wishart(dd + 10.0,
                                  SpdMatrix((std::sqrt(gamma) / dd) * Matrix::Identity(d, d)), rng);
  };
  SpdMatrix s1 = draw(d1);
  SpdMatrix s2 = draw(d2);
  return SeparableState{std::move(s1), std::move(s2)};
}

FlipFlopResult flipflop_mle(const Dataset& data, double tol, Index max_iter) {
  const double n = static_cast<double>(data.n());
  const double d1 = static_cast<double>(data.d1());
  const double d2 = static_cast<double>(data.d2());
  if (!(n * d2 > d1) || !(n * d1 > d2)) {
    throw Error(ErrorCode::kInvalidArgument, "flipflop_mle: too few observations for an MLE");
  }
  if (max_iter < 1) throw Error(ErrorCode::kInvalidArgument, "flipflop_mle: max_iter must be >= 1");

  SpdMatrix sigma1 = SpdMatrix::identity(data.d1());
  SpdMatrix sigma2 = SpdMatrix(weighted_scatter_2(sigma1.inverse(), data.pvl()) / (n * d1));
  FlipFlopResult out{SeparableState{sigma1, sigma2}, 0, false, {}};
  double best = std::numeric_limits<double>::infinity();
  double prev = std::numeric_limits<double>::infinity();
  for (Index it = 0; it < max_iter; ++it) {
    sigma1 = SpdMatrix(weighted_scatter_1(sigma2.inverse(), data.pvl()) / (n * d2));
    sigma2 = SpdMatrix(weighted_scatter_2(sigma1.inverse(), data.pvl()) / (n * d1));
    SeparableState current{sigma1, sigma2};
    const double value = nll(current, data);
    out.nll_trace.push_back(value);
    out.iterations = it + 1;
    if (value < best) {
      best = value;
      out.state = current;
    }
    if (std::abs(prev - value) <= tol * std::max(1.0, std::abs(value))) {
      out.converged = true;
      break;
    }
    prev = value;
  }
  out.state = normalize_component(out.state);
  return out;
}

SeparableState normalize_component(const SeparableState& state) {
  const double scale = std::exp(state.sigma2.log_det() / static_cast<double>(state.d2()));
  return SeparableState{SpdMatrix(state.sigma1.matrix() * scale),
                        SpdMatrix(state.sigma2.matrix() / scale)};
}

}  // namespace sepcov
