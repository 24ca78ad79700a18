#pragma once

// Gibbs and SGLMC samplers, step-size adaptation, dynamic trajectory length
// and parallel tempering.

#include "sepcov/metric.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace sepcov {

// Density used on |Sigma2| = 1 by the constrained metrics. kQuotient adds
// the scale marginal so the chain targets the normalized posterior;
// kRestricted evaluates likelihood and priors on the slice as they are.
enum class SliceDensity { kQuotient, kRestricted };

struct TargetDensity {
  std::shared_ptr<const Dataset> data;
  PriorSpec prior1;
  PriorSpec prior2;
  MetricKind metric;
  SliceDensity slice = SliceDensity::kQuotient;
  // Tempering power applied to likelihood + priors; the volume term is
  // never tempered.
  double inverse_temperature = 1.0;
};

struct TargetValue {
  // Log density with respect to the Riemannian volume of the metric:
  // c * (loglik + logprior) - 1/2 log|G|.
  double log_pi_h = 0.0;
  double log_posterior = 0.0;  // loglik + logprior, untempered
  FactorGradient grad;         // Euclidean gradient of log_pi_h
};

TargetValue target_eval(const TargetDensity& target, const SeparableState& state);

// One sweep of the conjugate full conditionals (Sigma1 then Sigma2). Both
// priors must be inverse Wishart, otherwise kNonConjugatePrior.
SeparableState gibbs_step(const SeparableState& state, const TargetDensity& target, Rng& rng);

struct PhasePoint {
  SeparableState state;
  TangentPair v;
};

// -log_pi_h + kinetic energy.
double hamiltonian(const TargetDensity& target, const PhasePoint& point);

// Kick, geodesic drift over eps, kick. `force` holds the Riemannian gradient
// at point.state on entry and is refreshed on exit.
void leapfrog_step(const TargetDensity& target, PhasePoint& point, TangentPair& force,
                   double eps);
TangentPair target_force(const TargetDensity& target, const SeparableState& state);

struct FixedSteps {
  Index steps = 10;
};
struct DynamicSteps {
  Index max_steps = 1024;
};
using LeapfrogPolicy = std::variant<FixedSteps, DynamicSteps>;

struct ChainSample {
  SeparableState state;
  bool accepted = false;
  double delta_energy = 0.0;  // h* - h
  double accept_prob = 0.0;
  double epsilon = 0.0;
  Index steps = 0;
};

// One SGLMC transition. Numerical failures inside the trajectory reject the
// proposal instead of throwing.
ChainSample sglmc_step(const SeparableState& state, const TargetDensity& target, double eps,
                       const LeapfrogPolicy& leapfrog, Rng& rng);

// Continue while <v, -W> >= 0 where W is the log map from `current` back to
// `start`, factor by factor.
bool dynamic_continue(const SeparableState& start, const SeparableState& current,
                      const TangentPair& v, const MetricKind& metric);

class DualAveraging {
 public:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  DualAveraging(double epsilon0, double target_accept);

  // Feeds one acceptance probability and returns the next step size.
  double update(double accept_prob);
  double epsilon() const;
  // Step size to freeze at the end of adaptation.
  double final_epsilon() const;
  Index iteration() const { return m_; }
  double log_eps_bar() const { return log_eps_bar_; }

 private:
  double target_;
  double mu_;
  double log_eps_;
  double log_eps_bar_ = 0.0;
  double h_bar_ = 0.0;
  Index m_ = 0;
};

// c_i = c1^(1 - (i-1)/(n-1)); coldest chain last.
std::vector<double> tempering_ladder(double c1, Index n_chains);

// (H_i - H_j)(1/T_i - 1/T_j)
double swap_log_ratio(double h_i, double h_j, double t_i, double t_j);
bool swap_accept(double h_i, double h_j, double t_i, double t_j, Rng& rng);

enum class SamplerKind { kGibbs, kSglmc };

struct Tempering {
  Index n_chains = 5;
  double c1 = 0.5;
};

struct SamplerConfig {
  SamplerKind sampler = SamplerKind::kSglmc;
  Index n_adapt = 500;
  Index n_burn = 500;
  Index n_samples = 2000;
  Index thin = 1;
  LeapfrogPolicy leapfrog = FixedSteps{};
  double epsilon0 = 0.1;
  double target_accept = 0.8;
  std::uint64_t seed = 1;
  std::optional<Tempering> tempering;
};

void validate_config(const SamplerConfig& config);

struct ChainRun {
  std::vector<ChainSample> samples;  // retained samples of the cold chain
  double epsilon = 0.0;              // frozen step size after adaptation
  Index rejected_on_error = 0;
  Index swaps_proposed = 0;
  Index swaps_accepted = 0;
};

// Adaptation, burn-in, then n_samples retained draws (every `thin`-th
// iteration). Without `init` the chain starts at the flip-flop MLE, or at the
// identity when the data cannot support it. Deterministic in config.seed.
ChainRun run_chain(const SamplerConfig& config, const TargetDensity& target,
                   const std::optional<SeparableState>& init = std::nullopt);

}  // namespace sepcov
