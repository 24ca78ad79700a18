#include <gtest/gtest.h>

#include <algorithm>

#include "sepcov/diagnostics.hpp"
#include "sepcov/error.hpp"
#include "sepcov/sampler.hpp"
#include "test_util.hpp"

namespace sepcov {
namespace {

using testing::fd_compare;
using testing::random_spd;
using testing::random_symmetric;
using testing::rel_frobenius;

std::shared_ptr<const Dataset> generated(Index d1, Index d2, Index n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  const SeparableState truth = sample_truth(d1, d2, 5.0, rng);
  return std::make_shared<const Dataset>(sample_matrix_normal(truth, n, rng));
}

TargetDensity iw_target(std::shared_ptr<const Dataset> data, MetricKind metric) {
  const Index d1 = data->d1(), d2 = data->d2();
  return TargetDensity{std::move(data), default_iw_prior(d1, 5.0), default_iw_prior(d2, 5.0), metric};
}

SeparableState random_state(Index d1, Index d2, Rng& rng) {
  return SeparableState{SpdMatrix(random_spd(d1, rng)), SpdMatrix(random_spd(d2, rng))};
}

const std::vector<MetricKind>& all_kinds() {
  static const std::vector<MetricKind> kinds{Regularized{0.95}, Orthogonalized{}, Weighted{0.5},
                                             Product{}};
  return kinds;
}

SeparableState start_for(const TargetDensity& t) {
  const SeparableState s = flipflop_mle(*t.data).state;
  return is_constrained(t.metric) ? normalize_component(s) : s;
}

TEST(TargetEval, GradientMatchesFiniteDifferences) {
  Rng rng = make_stream(91, 1);
  const auto data = generated(2, 3, 20, 91);
  for (const auto& kind : all_kinds()) {
    for (SliceDensity slice : {SliceDensity::kQuotient, SliceDensity::kRestricted}) {
      TargetDensity t = iw_target(data, kind);
      t.slice = slice;
      t.inverse_temperature = 0.7;
      const SeparableState s = random_state(2, 3, rng);
      const TargetValue tv = target_eval(t, s);
      const auto f1 = [&](const Matrix& x) { return target_eval(t, {SpdMatrix(x), s.sigma2}).log_pi_h; };
      const auto f2 = [&](const Matrix& x) { return target_eval(t, {s.sigma1, SpdMatrix(x)}).log_pi_h; };
      EXPECT_LT(fd_compare(f1, s.sigma1.matrix(), tv.grad.g1).rel_error(), 1e-6) << metric_name(kind);
      EXPECT_LT(fd_compare(f2, s.sigma2.matrix(), tv.grad.g2).rel_error(), 1e-6) << metric_name(kind);
    }
  }
}

TEST(TargetEval, SiwAndReferenceGradients) {
  Rng rng = make_stream(92, 1);
  const auto data = generated(2, 3, 20, 92);
  for (const PriorSpec& p : {PriorSpec{moment_matched_siw(3, 5.0)}, PriorSpec{ReferencePrior{}}}) {
    const TargetDensity t{data, moment_matched_siw(2, 5.0), p, Product{}};
    const SeparableState s = random_state(2, 3, rng);
    const TargetValue tv = target_eval(t, s);
    const auto f2 = [&](const Matrix& x) { return target_eval(t, {s.sigma1, SpdMatrix(x)}).log_pi_h; };
    EXPECT_LT(fd_compare(f2, s.sigma2.matrix(), tv.grad.g2).rel_error(), 1e-5);
  }
}

TEST(TargetEval, ProductAndRestrictedOrthogonalizedDifferByHausdorffTerm) {
  Rng rng = make_stream(93, 1);
  const auto data = generated(2, 3, 20, 93);
  TargetDensity orth = iw_target(data, Orthogonalized{});
  orth.slice = SliceDensity::kRestricted;
  const TargetDensity prod = iw_target(data, Product{});
  for (int rep = 0; rep < 5; ++rep) {
    const SeparableState s = random_state(2, 3, rng);
    const double diff = target_eval(prod, s).log_pi_h - target_eval(orth, s).log_pi_h;
    EXPECT_NEAR(diff, 0.5 * 4.0 * s.sigma2.log_det(), 1e-10 * std::max(1.0, std::abs(diff)));
  }
}

TEST(TargetEval, QuotientDensityAddsScaleMarginal) {
  Rng rng = make_stream(94, 1);
  const auto data = generated(2, 3, 20, 94);
  TargetDensity q = iw_target(data, Orthogonalized{});
  TargetDensity r = q;
  r.slice = SliceDensity::kRestricted;
  const SeparableState s = normalize_component(random_state(2, 3, rng));
  EXPECT_NEAR(target_eval(q, s).log_posterior - target_eval(r, s).log_posterior,
              scale_marginal(q.prior1, q.prior2, s).value, 1e-10);
  // unconstrained kinds never use it
  const TargetDensity reg = iw_target(data, Regularized{0.5});
  EXPECT_NEAR(target_eval(reg, s).log_posterior,
              -nll(s, *data) + prior_logpdf_grad(reg.prior1, s.sigma1).value +
                  prior_logpdf_grad(reg.prior2, s.sigma2).value,
              1e-10);
}

TEST(TargetEval, PriorOnlyGradientIsAdditive) {
  Rng rng = make_stream(95, 1);
  const TargetDensity t = iw_target(std::make_shared<const Dataset>(Dataset::empty(2, 3)), Product{});
  const SeparableState s = random_state(2, 3, rng);
  const TargetValue tv = target_eval(t, s);
  const FactorGradient mg = metric_grad_logdet(Product{}, s);
  EXPECT_LT(rel_frobenius(tv.grad.g1, prior_logpdf_grad(t.prior1, s.sigma1).grad - 0.5 * mg.g1), 1e-12);
  EXPECT_LT(rel_frobenius(tv.grad.g2, prior_logpdf_grad(t.prior2, s.sigma2).grad - 0.5 * mg.g2), 1e-12);
}

TEST(Leapfrog, ReversibleForAllKinds) {
  const auto data = generated(2, 3, 50, 96);
  Rng rng = make_stream(96, 1);
  for (const auto& kind : all_kinds()) {
    const TargetDensity t = iw_target(data, kind);
    const SeparableState s0 = start_for(t);
    PhasePoint p{s0, sample_velocity(kind, s0, rng)};
    TangentPair force = target_force(t, p.state);
    for (int i = 0; i < 10; ++i) leapfrog_step(t, p, force, 0.05);
    p.v.v1 = -p.v.v1;
    p.v.v2 = -p.v.v2;
    for (int i = 0; i < 10; ++i) leapfrog_step(t, p, force, 0.05);
    EXPECT_LT(rel_frobenius(p.state.sigma1.matrix(), s0.sigma1.matrix()), 1e-8) << metric_name(kind);
    EXPECT_LT(rel_frobenius(p.state.sigma2.matrix(), s0.sigma2.matrix()), 1e-8) << metric_name(kind);
  }
}

double trajectory_energy_error(const TargetDensity& t, const SeparableState& s, const TangentPair& v,
                               double eps, int steps) {
  PhasePoint p{s, v};
  const double h0 = hamiltonian(t, p);
  TangentPair force = target_force(t, p.state);
  for (int i = 0; i < steps; ++i) leapfrog_step(t, p, force, eps);
  return std::abs(hamiltonian(t, p) - h0);
}

TEST(Leapfrog, SecondOrderEnergyErrorAndSmallStepLimit) {
  const auto data = generated(2, 3, 50, 97);
  for (const auto& kind : all_kinds()) {
    const TargetDensity t = iw_target(data, kind);
    const SeparableState s0 = start_for(t);
    Rng rng = make_stream(97, 2);
    std::vector<double> ratios;
    for (int rep = 0; rep < 20; ++rep) {
      const TangentPair v = sample_velocity(kind, s0, rng);
      const double e1 = trajectory_energy_error(t, s0, v, 0.02, 10);
      const double e2 = trajectory_energy_error(t, s0, v, 0.01, 20);
      ratios.push_back(e1 / e2);
    }
    std::nth_element(ratios.begin(), ratios.begin() + 10, ratios.end());
    EXPECT_GE(ratios[10], 3.0) << metric_name(kind);
    EXPECT_LE(ratios[10], 5.0) << metric_name(kind);

    const TangentPair v = sample_velocity(kind, s0, rng);
    EXPECT_LT(trajectory_energy_error(t, s0, v, 1e-5, 3), 1e-8);
  }
}

TEST(Leapfrog, ConstrainedVelocitiesStayTraceFree) {
  const auto data = generated(2, 3, 50, 98);
  const TargetDensity t = iw_target(data, Orthogonalized{});
  Rng rng = make_stream(98, 1);
  const SeparableState s0 = start_for(t);
  PhasePoint p{s0, sample_velocity(t.metric, s0, rng)};
  TangentPair force = target_force(t, p.state);
  for (int i = 0; i < 20; ++i) {
    leapfrog_step(t, p, force, 0.05);
    EXPECT_NEAR((p.state.sigma2.inverse() * p.v.v2).trace(), 0.0, 1e-9 * std::max(1.0, p.v.v2.norm()));
    EXPECT_NEAR(p.state.sigma2.log_det(), 0.0, 1e-8);
  }
}

TEST(SglmcStep, TinyStepAlmostAlwaysAccepts) {
  const auto data = generated(2, 3, 50, 99);
  const TargetDensity t = iw_target(data, Regularized{0.95});
  Rng rng = make_stream(99, 1);
  const SeparableState s0 = start_for(t);
  for (int i = 0; i < 20; ++i) {
    const ChainSample c = sglmc_step(s0, t, 1e-5, FixedSteps{3}, rng);
    EXPECT_LT(std::abs(c.delta_energy), 1e-8);
    EXPECT_GT(c.accept_prob, 1.0 - 1e-8);
    EXPECT_EQ(c.steps, 3);
  }
  EXPECT_THROW(sglmc_step(s0, t, 0.0, FixedSteps{3}, rng), Error);
}

TEST(SglmcStep, NumericalFailureRejects) {
  // a huge step sends the factors to numerically singular matrices
  const auto data = generated(2, 3, 50, 100);
  const TargetDensity t = iw_target(data, Product{});
  Rng rng = make_stream(100, 1);
  const SeparableState s0 = start_for(t);
  for (int i = 0; i < 5; ++i) {
    const ChainSample c = sglmc_step(s0, t, 50.0, FixedSteps{10}, rng);
    EXPECT_FALSE(c.accepted);
    EXPECT_EQ(rel_frobenius(c.state.sigma1.matrix(), s0.sigma1.matrix()), 0.0);
  }
}

TEST(DualAveraging, FeedbackDirection) {
  DualAveraging down(0.1, 0.8), up(0.1, 0.8);
  double last_down = 0.0, last_up = 0.0;
  for (int i = 0; i < 50; ++i) {
    last_down = down.update(0.0);
    last_up = up.update(1.0);
  }
  EXPECT_LT(last_down, 0.1);
  EXPECT_GT(last_up, 0.1);
  EXPECT_LT(down.update(0.0), last_down);
  EXPECT_GT(up.update(1.0), last_up);
  EXPECT_EQ(down.iteration(), 51);
}

TEST(DualAveraging, ConstantTargetAcceptanceConverges) {
  DualAveraging da(0.1, 0.8);
  double at_1900 = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    da.update(0.8);
    if (i == 1900) at_1900 = da.log_eps_bar();
  }
  EXPECT_LT(std::abs(da.log_eps_bar() - at_1900), 1e-3);
  EXPECT_NEAR(da.final_epsilon(), std::exp(da.log_eps_bar()), 1e-15);
  EXPECT_THROW(DualAveraging(0.0, 0.8), Error);
  EXPECT_THROW(DualAveraging(0.1, 1.0), Error);
}

TEST(Tempering, Ladder) {
  const std::vector<double> c = tempering_ladder(0.5, 5);
  const std::vector<double> expected{0.5, std::pow(0.5, 0.75), std::pow(0.5, 0.5), std::pow(0.5, 0.25), 1.0};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(c[i], expected[i], 1e-15);
  EXPECT_EQ(c.front(), 0.5);
  EXPECT_EQ(c.back(), 1.0);
  EXPECT_EQ(tempering_ladder(0.3, 2), (std::vector<double>{0.3, 1.0}));
  for (double x : tempering_ladder(1.0, 4)) EXPECT_EQ(x, 1.0);
  EXPECT_THROW(tempering_ladder(0.0, 3), Error);
  EXPECT_THROW(tempering_ladder(0.5, 1), Error);
}

TEST(Tempering, SwapRule) {
  Rng rng = make_stream(101, 1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(swap_accept(3.0, 3.0, 1.0, 2.0, rng));
    EXPECT_TRUE(swap_accept(3.0, 9.0, 2.0, 2.0, rng));
  }
  const double r = swap_log_ratio(10.0, 12.0, 1.0, 1.0 / 0.7);
  EXPECT_NEAR(r, (10.0 - 12.0) * (1.0 - 0.7), 1e-15);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += swap_accept(10.0, 12.0, 1.0, 1.0 / 0.7, rng) ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(hits) / n, std::exp(r), 0.02);
}

TEST(DynamicTermination, Cases) {
  Rng rng = make_stream(102, 1);
  const SeparableState s = random_state(2, 3, rng);
  const TangentPair v{random_symmetric(2, rng), random_symmetric(3, rng)};
  EXPECT_TRUE(dynamic_continue(s, s, v, Product{}));

  // scalar reduction: sign(v (log s_t - log s_0))
  const SeparableState a{SpdMatrix(Matrix::Constant(1, 1, 1.0)), SpdMatrix(Matrix::Constant(1, 1, 1.0))};
  const SeparableState b{SpdMatrix(Matrix::Constant(1, 1, 2.0)), SpdMatrix(Matrix::Constant(1, 1, 1.0))};
  EXPECT_TRUE(dynamic_continue(a, b, {Matrix::Constant(1, 1, 0.3), Matrix::Zero(1, 1)}, Product{}));
  EXPECT_FALSE(dynamic_continue(a, b, {Matrix::Constant(1, 1, -0.3), Matrix::Zero(1, 1)}, Product{}));

  // along a geodesic from the start the rule never fires
  for (const auto& kind : all_kinds()) {
    SeparableState s0 = random_state(2, 3, rng);
    if (is_constrained(kind)) s0 = normalize_component(s0);
    const TangentPair v0 = sample_velocity(kind, s0, rng);
    for (double t : {0.1, 0.5, 1.0, 3.0}) {
      const auto [s1, v1] = geodesic_flow(s0.sigma1, v0.v1, t);
      const auto [s2, v2] = geodesic_flow(s0.sigma2, v0.v2, t);
      EXPECT_TRUE(dynamic_continue(s0, {s1, s2}, {v1, v2}, kind));
    }
  }
}

TEST(Gibbs, EmptyDataDrawsFromPrior) {
  const TargetDensity t = TargetDensity{std::make_shared<const Dataset>(Dataset::empty(2, 2)),
                                        IwPrior{12.0, Matrix::Identity(2, 2)},
                                        IwPrior{8.0, 2.0 * Matrix::Identity(2, 2)}, Product{}};
  Rng rng = make_stream(103, 1);
  SeparableState s{SpdMatrix::identity(2), SpdMatrix::identity(2)};
  Matrix m1 = Matrix::Zero(2, 2), m2 = Matrix::Zero(2, 2);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    s = gibbs_step(s, t, rng);
    m1 += s.sigma1.matrix();
    m2 += s.sigma2.matrix();
  }
  EXPECT_LT((m1 / n - Matrix::Identity(2, 2) / 9.0).cwiseAbs().maxCoeff(), 0.05 / 9.0);
  EXPECT_LT((m2 / n - 2.0 * Matrix::Identity(2, 2) / 5.0).cwiseAbs().maxCoeff(), 0.05 * 0.4);
}

TEST(Gibbs, ConditionalMeanOfSigma1) {
  const auto data = generated(2, 3, 30, 104);
  const TargetDensity t = iw_target(data, Product{});
  Rng rng = make_stream(104, 1);
  const SeparableState s0 = random_state(2, 3, rng);
  const auto& iw = std::get<IwPrior>(t.prior1);
  const Matrix w = weighted_scatter_1(s0.sigma2.inverse(), data->pvl());
  const Matrix expected = (iw.scale + w) / (iw.nu + 3.0 * 30.0 - 2.0 - 1.0);
  Matrix acc = Matrix::Zero(2, 2);
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += gibbs_step(s0, t, rng).sigma1.matrix();
  EXPECT_LT((acc / n - expected).cwiseAbs().maxCoeff(), 0.05 * expected.diagonal().minCoeff());
}

TEST(Gibbs, NonConjugatePriorThrows) {
  const auto data = generated(2, 3, 10, 105);
  const TargetDensity t{data, moment_matched_siw(2, 5.0), default_iw_prior(3, 5.0), Product{}};
  Rng rng = make_stream(105, 1);
  try {
    gibbs_step(SeparableState{SpdMatrix::identity(2), SpdMatrix::identity(3)}, t, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonConjugatePrior);
  }
  SamplerConfig c;
  c.sampler = SamplerKind::kGibbs;
  c.n_adapt = c.n_burn = c.n_samples = 2;
  EXPECT_THROW(run_chain(c, t), Error);
}

SamplerConfig small_config(SamplerKind kind, std::uint64_t seed) {
  SamplerConfig c;
  c.sampler = kind;
  c.n_adapt = 100;
  c.n_burn = 50;
  c.n_samples = 100;
  c.seed = seed;
  return c;
}

TEST(RunChain, DeterministicAndCountsSamples) {
  const auto data = generated(2, 3, 40, 106);
  const TargetDensity t = iw_target(data, Regularized{0.95});
  const SamplerConfig c = small_config(SamplerKind::kSglmc, 7);
  const ChainRun a = run_chain(c, t);
  const ChainRun b = run_chain(c, t);
  ASSERT_EQ(a.samples.size(), 100u);
  ASSERT_EQ(b.samples.size(), 100u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].state.sigma1.matrix(), b.samples[i].state.sigma1.matrix());
    EXPECT_EQ(a.samples[i].state.sigma2.matrix(), b.samples[i].state.sigma2.matrix());
    EXPECT_EQ(a.samples[i].epsilon, a.epsilon);
  }
  SamplerConfig other = c;
  other.seed = 8;
  EXPECT_NE(run_chain(other, t).samples.back().state.sigma1.matrix(), a.samples.back().state.sigma1.matrix());

  SamplerConfig empty = c;
  empty.n_samples = 0;
  EXPECT_TRUE(run_chain(empty, t).samples.empty());

  SamplerConfig thinned = c;
  thinned.thin = 3;
  thinned.n_samples = 10;
  EXPECT_EQ(run_chain(thinned, t).samples.size(), 10u);
}

TEST(RunChain, ConfigValidation) {
  SamplerConfig c;
  c.n_samples = -1;
  EXPECT_THROW(validate_config(c), Error);
  c = SamplerConfig{};
  c.target_accept = 1.0;
  EXPECT_THROW(validate_config(c), Error);
  c = SamplerConfig{};
  c.leapfrog = DynamicSteps{2000};
  EXPECT_THROW(validate_config(c), Error);
  c = SamplerConfig{};
  c.sampler = SamplerKind::kGibbs;
  c.tempering = Tempering{};
  EXPECT_THROW(validate_config(c), Error);
  c = SamplerConfig{};
  c.thin = 0;
  EXPECT_THROW(validate_config(c), Error);
}

TEST(RunChain, ConstrainedSamplesStayOnSlice) {
  const auto data = generated(2, 3, 40, 107);
  for (const MetricKind kind : {MetricKind{Orthogonalized{}}, MetricKind{Weighted{0.5}}}) {
    const ChainRun r = run_chain(small_config(SamplerKind::kSglmc, 3), iw_target(data, kind));
    for (const auto& s : r.samples) EXPECT_NEAR(s.state.sigma2.log_det(), 0.0, 1e-8);
  }
}

TEST(RunChain, AdaptedAcceptanceNearTarget) {
  const auto data = generated(2, 3, 200, 108);
  SamplerConfig c = small_config(SamplerKind::kSglmc, 5);
  c.n_adapt = 300;
  c.n_samples = 400;
  const ChainRun r = run_chain(c, iw_target(data, Regularized{0.95}));
  double acc = 0.0;
  for (const auto& s : r.samples) acc += s.accept_prob;
  EXPECT_NEAR(acc / static_cast<double>(r.samples.size()), 0.8, 0.1);
}

TEST(RunChain, DynamicStepsAndTempering) {
  const auto data = generated(2, 3, 40, 109);
  SamplerConfig c = small_config(SamplerKind::kSglmc, 9);
  c.leapfrog = DynamicSteps{64};
  const ChainRun dyn = run_chain(c, iw_target(data, Product{}));
  for (const auto& s : dyn.samples) {
    EXPECT_GE(s.steps, 0);
    EXPECT_LE(s.steps, 64);
  }
  c.leapfrog = FixedSteps{5};
  c.tempering = Tempering{3, 0.5};
  const ChainRun pt = run_chain(c, iw_target(data, Orthogonalized{}));
  EXPECT_EQ(pt.samples.size(), 100u);
  EXPECT_EQ(pt.swaps_proposed, 250);
  EXPECT_GT(pt.swaps_accepted, 0);
  for (const auto& s : pt.samples) EXPECT_NEAR(s.state.sigma2.log_det(), 0.0, 1e-8);
}

TEST(RunChain, ReferencePriorChainNeverAborts) {
  const auto data = generated(2, 2, 40, 110);
  const TargetDensity t{data, ReferencePrior{}, ReferencePrior{}, Product{}};
  const ChainRun r = run_chain(small_config(SamplerKind::kSglmc, 4), t);
  EXPECT_EQ(r.samples.size(), 100u);
}

// The volume-term sign decides whether SGLMC agrees with Gibbs; the wrong
// sign shifts log|Sigma1 (x) Sigma2| by several posterior standard deviations.
TEST(RunChain, SglmcAgreesWithGibbsOnSmallInstance) {
  const auto data = generated(2, 2, 40, 111);
  SamplerConfig g = small_config(SamplerKind::kGibbs, 11);
  g.n_samples = 1500;
  SamplerConfig s = small_config(SamplerKind::kSglmc, 12);
  s.n_adapt = 300;
  s.n_samples = 1500;
  std::vector<double> lg, ls;
  for (const auto& x : run_chain(g, iw_target(data, Product{})).samples) lg.push_back(summarize(x.state).logdet_kron);
  for (const auto& x : run_chain(s, iw_target(data, Product{})).samples) ls.push_back(summarize(x.state).logdet_kron);
  EXPECT_LT(two_sample_ks(lg, ls), 0.12);
}

}  // namespace
}  // namespace sepcov
