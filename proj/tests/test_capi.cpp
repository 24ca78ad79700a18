#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "sepcov/sepcov.h"

namespace {

struct DataFixture : ::testing::Test {
  void SetUp() override {
    ASSERT_EQ(sepcov_generate(2, 3, 40, 5.0, 17, &truth, &data), SEPCOV_OK);
  }
  void TearDown() override {
    sepcov_state_free(truth);
    sepcov_dataset_free(data);
  }
  sepcov_state* truth = nullptr;
  sepcov_dataset* data = nullptr;
};

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(sepcov_version(), "0.1.0");
  EXPECT_STREQ(sepcov_status_name(SEPCOV_OK), "ok");
  EXPECT_STRNE(sepcov_status_name(SEPCOV_ERR_NOT_POSITIVE_DEFINITE), "unknown");
  EXPECT_STREQ(sepcov_summary_column(5), "logdet_kron");
  EXPECT_EQ(sepcov_summary_column(8), nullptr);
}

TEST(CApi, StateRoundTripAndErrors) {
  const double s1[4] = {2.0, 0.5, 0.5, 1.0};
  const double s2[1] = {3.0};
  sepcov_state* st = nullptr;
  ASSERT_EQ(sepcov_state_create(s1, 2, s2, 1, &st), SEPCOV_OK);
  size_t d1 = 0, d2 = 0;
  ASSERT_EQ(sepcov_state_dims(st, &d1, &d2), SEPCOV_OK);
  EXPECT_EQ(d1, 2u);
  EXPECT_EQ(d2, 1u);
  double back1[4], back2[1];
  ASSERT_EQ(sepcov_state_factors(st, back1, back2), SEPCOV_OK);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(back1[i], s1[i]);
  EXPECT_EQ(back2[0], 3.0);
  double summary[SEPCOV_SUMMARY_COLUMNS];
  ASSERT_EQ(sepcov_summarize(st, summary), SEPCOV_OK);
  EXPECT_NEAR(summary[2], 9.0, 1e-14);
  sepcov_state_free(st);

  const double bad[4] = {1.0, 2.0, 2.0, 1.0};
  sepcov_state* none = nullptr;
  EXPECT_EQ(sepcov_state_create(bad, 2, s2, 1, &none), SEPCOV_ERR_NOT_POSITIVE_DEFINITE);
  EXPECT_EQ(none, nullptr);
  EXPECT_GT(std::strlen(sepcov_last_error()), 0u);
  const double asym[4] = {1.0, 0.3, 0.0, 1.0};
  EXPECT_EQ(sepcov_state_create(asym, 2, s2, 1, &none), SEPCOV_ERR_NOT_SYMMETRIC);
  EXPECT_EQ(sepcov_state_create(nullptr, 2, s2, 1, &none), SEPCOV_ERR_NULL_ARGUMENT);
  sepcov_state_free(nullptr);
}

TEST_F(DataFixture, InfoRowsAndLikelihood) {
  size_t n = 0, d1 = 0, d2 = 0, rank = 0;
  ASSERT_EQ(sepcov_dataset_info(data, &n, &d1, &d2, &rank), SEPCOV_OK);
  EXPECT_EQ(n, 40u);
  EXPECT_EQ(d1, 2u);
  EXPECT_EQ(d2, 3u);
  EXPECT_GE(rank, 1u);
  std::vector<double> rows(n * 6);
  ASSERT_EQ(sepcov_dataset_rows(data, rows.data()), SEPCOV_OK);

  sepcov_dataset* copy = nullptr;
  ASSERT_EQ(sepcov_dataset_from_rows(rows.data(), n, 2, 3, &copy), SEPCOV_OK);
  double a = 0.0, b = 0.0;
  ASSERT_EQ(sepcov_nll(truth, data, &a), SEPCOV_OK);
  ASSERT_EQ(sepcov_nll(truth, copy, &b), SEPCOV_OK);
  EXPECT_NEAR(a, b, 1e-10 * std::abs(a));
  sepcov_dataset_free(copy);

  sepcov_dataset* empty = nullptr;
  ASSERT_EQ(sepcov_dataset_from_rows(nullptr, 0, 2, 3, &empty), SEPCOV_OK);
  sepcov_dataset_info(empty, &n, nullptr, nullptr, nullptr);
  EXPECT_EQ(n, 0u);
  sepcov_dataset_free(empty);
  EXPECT_EQ(sepcov_dataset_from_rows(rows.data(), 4, 0, 3, &copy), SEPCOV_ERR_INVALID_ARGUMENT);
}

TEST_F(DataFixture, FlipFlopImprovesOnTruth) {
  sepcov_state* mle = nullptr;
  int converged = 0;
  size_t iterations = 0;
  ASSERT_EQ(sepcov_flipflop(data, 1e-10, 1000, &mle, &converged, &iterations), SEPCOV_OK);
  EXPECT_EQ(converged, 1);
  EXPECT_GT(iterations, 0u);
  double at_mle = 0.0, at_truth = 0.0;
  sepcov_nll(mle, data, &at_mle);
  sepcov_nll(truth, data, &at_truth);
  EXPECT_LE(at_mle, at_truth);
  double summary[SEPCOV_SUMMARY_COLUMNS];
  sepcov_summarize(mle, summary);
  EXPECT_NEAR(summary[4], 0.0, 1e-10);
  sepcov_state_free(mle);
}

TEST_F(DataFixture, RunChainAndReadRecords) {
  sepcov_run_config c;
  ASSERT_EQ(sepcov_run_config_default(2, 3, 5.0, &c), SEPCOV_OK);
  EXPECT_EQ(c.metric, SEPCOV_METRIC_REGULARIZED);
  EXPECT_EQ(c.alpha, 0.95);
  EXPECT_EQ(c.leapfrog_steps, 10u);
  EXPECT_EQ(c.target_accept, 0.8);
  c.n_adapt = 50;
  c.n_burn = 20;
  c.n_samples = 30;
  sepcov_chain* chain = nullptr;
  ASSERT_EQ(sepcov_run(data, &c, &chain), SEPCOV_OK);
  ASSERT_EQ(sepcov_chain_length(chain), 30u);
  sepcov_chain_record rec;
  ASSERT_EQ(sepcov_chain_record_at(chain, 29, &rec), SEPCOV_OK);
  EXPECT_EQ(rec.steps, 10u);
  EXPECT_NEAR(rec.summary[2], rec.summary[0] * rec.summary[1], 1e-10 * rec.summary[2]);
  double eps = 0.0;
  size_t rejected = 0, proposed = 1, accepted = 1;
  ASSERT_EQ(sepcov_chain_stats(chain, &eps, &rejected, &proposed, &accepted), SEPCOV_OK);
  EXPECT_EQ(eps, rec.epsilon);
  EXPECT_EQ(proposed, 0u);
  double f1[4], f2[9];
  ASSERT_EQ(sepcov_chain_factors(chain, 0, f1, f2), SEPCOV_OK);
  EXPECT_EQ(sepcov_chain_record_at(chain, 30, &rec), SEPCOV_ERR_INVALID_ARGUMENT);
  sepcov_chain_free(chain);
}

TEST_F(DataFixture, GibbsDeterminismAndConstrainedSlice) {
  sepcov_run_config c;
  sepcov_run_config_default(2, 3, 5.0, &c);
  c.sampler = SEPCOV_SAMPLER_GIBBS;
  c.n_adapt = 0;
  c.n_burn = 10;
  c.n_samples = 20;
  c.seed = 99;
  sepcov_chain* a = nullptr;
  sepcov_chain* b = nullptr;
  ASSERT_EQ(sepcov_run(data, &c, &a), SEPCOV_OK);
  ASSERT_EQ(sepcov_run(data, &c, &b), SEPCOV_OK);
  for (size_t i = 0; i < 20; ++i) {
    sepcov_chain_record ra, rb;
    sepcov_chain_record_at(a, i, &ra);
    sepcov_chain_record_at(b, i, &rb);
    EXPECT_EQ(std::memcmp(ra.summary, rb.summary, sizeof ra.summary), 0);
  }
  sepcov_chain_free(a);
  sepcov_chain_free(b);

  sepcov_run_config o;
  sepcov_run_config_default(2, 3, 5.0, &o);
  o.metric = SEPCOV_METRIC_ORTHOGONALIZED;
  o.n_adapt = 30;
  o.n_burn = 10;
  o.n_samples = 20;
  for (int restricted : {0, 1}) {
    o.restricted_slice = restricted;
    sepcov_chain* ch = nullptr;
    ASSERT_EQ(sepcov_run(data, &o, &ch), SEPCOV_OK);
    sepcov_chain_record r;
    sepcov_chain_record_at(ch, 19, &r);
    EXPECT_NEAR(r.summary[4], 0.0, 1e-8);
    sepcov_chain_free(ch);
  }
}

TEST_F(DataFixture, ConfigErrorsMapToStatusCodes) {
  sepcov_run_config c;
  sepcov_run_config_default(2, 3, 5.0, &c);
  sepcov_chain* chain = nullptr;
  c.alpha = 1.0;
  EXPECT_EQ(sepcov_run(data, &c, &chain), SEPCOV_ERR_INVALID_ARGUMENT);
  sepcov_run_config_default(2, 3, 5.0, &c);
  c.sampler = SEPCOV_SAMPLER_GIBBS;
  sepcov_prior_default(SEPCOV_PRIOR_SIW, 2, 5.0, &c.prior1);
  EXPECT_EQ(sepcov_run(data, &c, &chain), SEPCOV_ERR_NON_CONJUGATE_PRIOR);
  sepcov_run_config_default(2, 3, 5.0, &c);
  c.tempering_chains = 3;
  c.tempering_c1 = 0.0;
  EXPECT_EQ(sepcov_run(data, &c, &chain), SEPCOV_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(chain, nullptr);
  EXPECT_EQ(sepcov_run(nullptr, &c, &chain), SEPCOV_ERR_NULL_ARGUMENT);
}

TEST(CApi, PriorDefaults) {
  sepcov_prior p;
  ASSERT_EQ(sepcov_prior_default(SEPCOV_PRIOR_IW, 4, 5.0, &p), SEPCOV_OK);
  EXPECT_EQ(p.nu, 6.0);
  EXPECT_EQ(p.scale, 1.25);
  ASSERT_EQ(sepcov_prior_default(SEPCOV_PRIOR_SIW, 4, 5.0, &p), SEPCOV_OK);
  EXPECT_EQ(p.a, 3.0);
  EXPECT_NEAR(p.c, std::sqrt(5.0) / 4.0, 1e-15);
}

TEST(CApi, Diagnostics) {
  std::vector<double> x(200);
  for (size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * static_cast<double>(i)) + 0.01 * static_cast<double>(i % 7);
  std::vector<double> out(11);
  ASSERT_EQ(sepcov_acf(x.data(), x.size(), 10, out.data()), SEPCOV_OK);
  EXPECT_EQ(out[0], 1.0);
  double e = 0.0;
  ASSERT_EQ(sepcov_ess(x.data(), x.size(), &e), SEPCOV_OK);
  EXPECT_GT(e, 0.0);
  EXPECT_EQ(sepcov_ess(x.data(), 5, &e), SEPCOV_ERR_INVALID_ARGUMENT);
  double ks = 1.0;
  ASSERT_EQ(sepcov_ks(x.data(), x.size(), x.data(), x.size(), &ks), SEPCOV_OK);
  EXPECT_EQ(ks, 0.0);
  EXPECT_EQ(sepcov_ks(x.data(), 0, x.data(), 3, &ks), SEPCOV_ERR_EMPTY_DATA);
  EXPECT_EQ(sepcov_acf(x.data(), 5, 10, out.data()), SEPCOV_ERR_INVALID_ARGUMENT);
}

}  // namespace
