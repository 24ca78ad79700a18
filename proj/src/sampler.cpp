#include "sepcov/sampler.hpp"

#include "sepcov/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sepcov {

namespace {

TangentPair axpy(const TangentPair& v, double a, const TangentPair& x) {
  return TangentPair{v.v1 + a * x.v1, v.v2 + a * x.v2};
}

void check_target(const TargetDensity& target) {
  if (!target.data) throw Error(ErrorCode::kInvalidArgument, "target: no dataset");
  if (!(target.inverse_temperature > 0.0 && target.inverse_temperature <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target: inverse temperature must be in (0, 1]");
  }
}

}  // namespace

TargetValue target_eval(const TargetDensity& target, const SeparableState& state) {
  check_target(target);
  const Dataset& data = *target.data;
  const LogDensity p1 = prior_logpdf_grad(target.prior1, state.sigma1);
  const LogDensity p2 = prior_logpdf_grad(target.prior2, state.sigma2);
  const FactorGradient ng = nll_grad(state, data);
  const FactorGradient mg = metric_grad_logdet(target.metric, state);
  const double c = target.inverse_temperature;

  TargetValue out;
  out.log_posterior = -nll(state, data) + p1.value + p2.value;
  out.grad.g1 = c * (p1.grad - ng.g1) - 0.5 * mg.g1;
  out.grad.g2 = c * (p2.grad - ng.g2) - 0.5 * mg.g2;
  if (is_constrained(target.metric) && target.slice == SliceDensity::kQuotient) {
    const ScaleMarginal sm = scale_marginal(target.prior1, target.prior2, state);
    out.log_posterior += sm.value;
    out.grad.g1 += c * sm.grad.g1;
    out.grad.g2 += c * sm.grad.g2;
  }
  out.log_pi_h = c * out.log_posterior - 0.5 * metric_logdet(target.metric, state);
  if (!std::isfinite(out.log_pi_h)) {
    throw Error(ErrorCode::kInvalidArgument, "target: log density is not finite");
  }
  return out;
}

SeparableState gibbs_step(const SeparableState& state, const TargetDensity& target, Rng& rng) {
  check_target(target);
  const auto* iw1 = std::get_if<IwPrior>(&target.prior1);
  const auto* iw2 = std::get_if<IwPrior>(&target.prior2);
  if (iw1 == nullptr || iw2 == nullptr) {
    throw Error(ErrorCode::kNonConjugatePrior, "gibbs: both priors must be inverse Wishart");
  }
  const Dataset& data = *target.data;
  const double n = static_cast<double>(data.n());
  const double d1 = static_cast<double>(state.d1());
  const double d2 = static_cast<double>(state.d2());

  const Matrix w1 = weighted_scatter_1(state.sigma2.inverse(), data.pvl());
  SpdMatrix sigma1 =
      sample_inverse_wishart(iw1->nu + d2 * n, SpdMatrix(symm(iw1->scale + w1)), rng);
  const Matrix w2 = weighted_scatter_2(sigma1.inverse(), data.pvl());
  SpdMatrix sigma2 =
      sample_inverse_wishart(iw2->nu + d1 * n, SpdMatrix(symm(iw2->scale + w2)), rng);
  return SeparableState{std::move(sigma1), std::move(sigma2)};
}

TangentPair target_force(const TargetDensity& target, const SeparableState& state) {
  return riemannian_grad(target.metric, state, target_eval(target, state).grad);
}

double hamiltonian(const TargetDensity& target, const PhasePoint& point) {
  return -target_eval(target, point.state).log_pi_h +
         kinetic_energy(target.metric, point.state, point.v);
}

namespace {

void project_if_constrained(const MetricKind& metric, const SeparableState& state,
                            TangentPair& v) {
  if (is_constrained(metric)) v.v2 = project_tangent(state.sigma2, v.v2);
}

// Beyond this condition number a factor is numerically singular and the
// energy can no longer be trusted.
constexpr double kMaxCondition = 1e14;

void check_conditioning(const SeparableState& state) {
  for (const SpdMatrix* s : {&state.sigma1, &state.sigma2}) {
    if (!(s->max_eigenvalue() <= kMaxCondition * s->min_eigenvalue())) {
      throw Error(ErrorCode::kNotPositiveDefinite, "trajectory reached a numerically singular factor");
    }
  }
}

// Returns log_pi_h at the new position.
double leapfrog_impl(const TargetDensity& target, PhasePoint& point, TangentPair& force,
                     double eps) {
  point.v = axpy(point.v, 0.5 * eps, force);
  project_if_constrained(target.metric, point.state, point.v);
  auto [s1, v1] = geodesic_flow(point.state.sigma1, point.v.v1, eps);
  auto [s2, v2] = geodesic_flow(point.state.sigma2, point.v.v2, eps);
  point.state = SeparableState{std::move(s1), std::move(s2)};
  point.v = TangentPair{std::move(v1), std::move(v2)};
  check_conditioning(point.state);
  const TargetValue tv = target_eval(target, point.state);
  force = riemannian_grad(target.metric, point.state, tv.grad);
  point.v = axpy(point.v, 0.5 * eps, force);
  project_if_constrained(target.metric, point.state, point.v);
  return tv.log_pi_h;
}

}  // namespace

void leapfrog_step(const TargetDensity& target, PhasePoint& point, TangentPair& force,
                   double eps) {
  leapfrog_impl(target, point, force, eps);
}

bool dynamic_continue(const SeparableState& start, const SeparableState& current,
                      const TangentPair& v, const MetricKind& metric) {
  const TangentPair back{spd_log_map(current.sigma1, start.sigma1).matrix(),
                         spd_log_map(current.sigma2, start.sigma2).matrix()};
  return -metric_inner(metric, current, v, back) >= 0.0;
}

ChainSample sglmc_step(const SeparableState& state, const TargetDensity& target, double eps,
                       const LeapfrogPolicy& leapfrog, Rng& rng) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sglmc: step size must be > 0");
  ChainSample out{state, false, std::numeric_limits<double>::infinity(), 0.0, eps, 0};

  const Index max_steps = std::holds_alternative<FixedSteps>(leapfrog)
                              ? std::get<FixedSteps>(leapfrog).steps
                              : std::get<DynamicSteps>(leapfrog).max_steps;
  const bool dynamic = std::holds_alternative<DynamicSteps>(leapfrog);
  // The velocity is drawn before anything can fail so that the stream
  // advances identically on every iteration.
  TangentPair v = sample_velocity(target.metric, state, rng);
  const double u = uniform01(rng);

  PhasePoint point{state, std::move(v)};
  try {
    const TargetValue tv0 = target_eval(target, state);
    const double h0 = -tv0.log_pi_h + kinetic_energy(target.metric, state, point.v);
    TangentPair force = riemannian_grad(target.metric, state, tv0.grad);
    double log_pi = tv0.log_pi_h;
    Index steps = 0;
    while (steps < max_steps) {
      log_pi = leapfrog_impl(target, point, force, eps);
      ++steps;
      if (dynamic && !dynamic_continue(state, point.state, point.v, target.metric)) break;
    }
    out.steps = steps;
    const double h1 = -log_pi + kinetic_energy(target.metric, point.state, point.v);
    out.delta_energy = h1 - h0;
    if (std::isfinite(out.delta_energy)) {
      out.accept_prob = std::min(1.0, std::exp(-out.delta_energy));
    }
  } catch (const Error&) {
    out.accept_prob = 0.0;
  }
  if (u < out.accept_prob) {
    out.accepted = true;
    out.state = is_constrained(target.metric) ? normalize_component(point.state) : point.state;
  }
  return out;
}

DualAveraging::DualAveraging(double epsilon0, double target_accept)
    : target_(target_accept), mu_(std::log(10.0 * epsilon0)), log_eps_(std::log(epsilon0)) {
  if (!(epsilon0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dual averaging: eps0 <= 0");
  if (!(target_accept > 0.0 && target_accept < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dual averaging: target must be in (0, 1)");
  }
}

double DualAveraging::update(double accept_prob) {
  const double a = std::isfinite(accept_prob) ? std::clamp(accept_prob, 0.0, 1.0) : 0.0;
  ++m_;
  const double m = static_cast<double>(m_);
  const double eta = 1.0 / (m + kT0);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - a);
  log_eps_ = mu_ - std::sqrt(m) / kGamma * h_bar_;
  const double w = std::pow(m, -kKappa);
  log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
  return std::exp(log_eps_);
}

double DualAveraging::epsilon() const { return std::exp(log_eps_); }

double DualAveraging::final_epsilon() const {
  return m_ == 0 ? std::exp(log_eps_) : std::exp(log_eps_bar_);
}

std::vector<double> tempering_ladder(double c1, Index n_chains) {
  if (!(c1 > 0.0 && c1 <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tempering: c1 must be in (0, 1]");
  }
  if (n_chains < 2) throw Error(ErrorCode::kInvalidArgument, "tempering: need >= 2 chains");
  std::vector<double> c(static_cast<std::size_t>(n_chains));
  const double last = static_cast<double>(n_chains - 1);
  for (Index i = 0; i < n_chains; ++i) {
    c[static_cast<std::size_t>(i)] = std::pow(c1, 1.0 - static_cast<double>(i) / last);
  }
  c.front() = c1;
  c.back() = 1.0;
  return c;
}

double swap_log_ratio(double h_i, double h_j, double t_i, double t_j) {
  if (h_i == h_j || t_i == t_j) return 0.0;
  return (h_i - h_j) * (1.0 / t_i - 1.0 / t_j);
}

bool swap_accept(double h_i, double h_j, double t_i, double t_j, Rng& rng) {
  const double u = uniform01(rng);
  const double r = swap_log_ratio(h_i, h_j, t_i, t_j);
  return r >= 0.0 || u < std::exp(r);
}

void validate_config(const SamplerConfig& config) {
  if (config.n_adapt < 0 || config.n_burn < 0 || config.n_samples < 0) {
    throw Error(ErrorCode::kInvalidArgument, "config: counts must be >= 0");
  }
  if (config.thin < 1) throw Error(ErrorCode::kInvalidArgument, "config: thin must be >= 1");
  if (!(config.target_accept > 0.0 && config.target_accept < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "config: target_accept must be in (0, 1)");
  }
  if (!(config.epsilon0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "config: epsilon0 <= 0");
  if (const auto* f = std::get_if<FixedSteps>(&config.leapfrog); f && f->steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "config: leapfrog steps must be >= 1");
  }
  if (const auto* d = std::get_if<DynamicSteps>(&config.leapfrog);
      d && (d->max_steps < 1 || d->max_steps > 1024)) {
    throw Error(ErrorCode::kInvalidArgument, "config: L_max must be in [1, 1024]");
  }
  if (config.tempering) {
    if (config.sampler == SamplerKind::kGibbs) {
      throw Error(ErrorCode::kInvalidArgument, "config: tempering requires the sglmc sampler");
    }
    tempering_ladder(config.tempering->c1, config.tempering->n_chains);
  }
}

namespace {

SeparableState initial_state(const TargetDensity& target,
                             const std::optional<SeparableState>& init) {
  const Dataset& data = *target.data;
  SeparableState s = [&] {
    if (init) {
      if (init->d1() != data.d1() || init->d2() != data.d2()) {
        throw Error(ErrorCode::kDimensionMismatch, "run_chain: initial state dimensions");
      }
      return *init;
    }
    try {
      return flipflop_mle(data).state;
    } catch (const Error&) {
      return SeparableState{SpdMatrix::identity(data.d1()), SpdMatrix::identity(data.d2())};
    }
  }();
  return is_constrained(target.metric) ? normalize_component(s) : s;
}

struct Replica {
  TargetDensity target;
  SeparableState state;
  Rng rng;
  DualAveraging da;
  double eps;
};

}  // namespace

ChainRun run_chain(const SamplerConfig& config, const TargetDensity& target,
                   const std::optional<SeparableState>& init) {
  validate_config(config);
  check_target(target);
  validate_metric(target.metric);
  validate_prior(target.prior1, target.data->d1());
  validate_prior(target.prior2, target.data->d2());

  ChainRun run;
  const Index warm = config.n_adapt + config.n_burn;
  const Index total = warm + config.n_samples * config.thin;
  run.samples.reserve(static_cast<std::size_t>(config.n_samples));
  SeparableState start = initial_state(target, init);

  if (config.sampler == SamplerKind::kGibbs) {
    Rng rng = make_stream(config.seed, 1);
    SeparableState state = start;
    for (Index it = 0; it < total; ++it) {
      state = gibbs_step(state, target, rng);
      if (it >= warm && (it - warm) % config.thin == config.thin - 1) {
        run.samples.push_back(ChainSample{state, true, 0.0, 1.0, 0.0, 0});
      }
    }
    return run;
  }

  const std::vector<double> ladder =
      config.tempering ? tempering_ladder(config.tempering->c1, config.tempering->n_chains)
                       : std::vector<double>{1.0};
  std::vector<Replica> reps;
  reps.reserve(ladder.size());
  for (std::size_t r = 0; r < ladder.size(); ++r) {
    TargetDensity t = target;
    t.inverse_temperature = ladder[r];
    reps.push_back(Replica{std::move(t), start, make_stream(config.seed, r + 1),
                           DualAveraging(config.epsilon0, config.target_accept),
                           config.epsilon0});
  }
  Rng swap_rng = make_stream(config.seed, kSwapStream);
  const Index n_rep = static_cast<Index>(reps.size());

  for (Index it = 0; it < total; ++it) {
    std::optional<ChainSample> cold;
    for (Replica& rep : reps) {
      ChainSample s = sglmc_step(rep.state, rep.target, rep.eps, config.leapfrog, rep.rng);
      if (!std::isfinite(s.delta_energy)) ++run.rejected_on_error;
      if (it < config.n_adapt) {
        rep.eps = rep.da.update(s.accept_prob);
        if (it == config.n_adapt - 1) rep.eps = rep.da.final_epsilon();
      }
      rep.state = s.state;
      cold.emplace(std::move(s));
    }
    if (n_rep > 1) {
      const Index j = std::min<Index>(
          static_cast<Index>(uniform01(swap_rng) * static_cast<double>(n_rep - 1)), n_rep - 2);
      Replica& a = reps[static_cast<std::size_t>(j)];
      Replica& b = reps[static_cast<std::size_t>(j + 1)];
      ++run.swaps_proposed;
      try {
        const double ha = -target_eval(a.target, a.state).log_posterior;
        const double hb = -target_eval(b.target, b.state).log_posterior;
        if (swap_accept(ha, hb, 1.0 / a.target.inverse_temperature,
                        1.0 / b.target.inverse_temperature, swap_rng)) {
          std::swap(a.state, b.state);
          ++run.swaps_accepted;
        }
      } catch (const Error&) {
      }
      cold->state = reps.back().state;
    }
    if (it >= warm && (it - warm) % config.thin == config.thin - 1) {
      run.samples.push_back(std::move(*cold));
    }
  }
  run.epsilon = reps.back().eps;
  return run;
}

}  // namespace sepcov
