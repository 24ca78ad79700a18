#include "sepcov/sepcov.h"

#include "sepcov/diagnostics.hpp"
#include "sepcov/error.hpp"
#include "sepcov/sampler.hpp"

#include <cmath>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <vector>

struct sepcov_state {
  sepcov::SeparableState state;
};

struct sepcov_dataset {
  std::shared_ptr<const sepcov::Dataset> data;
};

struct sepcov_chain {
  sepcov::ChainRun run;
  std::vector<sepcov::SummaryRecord> summaries;
};

namespace {

thread_local std::string g_last_error;

sepcov_status fail(sepcov_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
sepcov_status guarded(F&& f) {
  try {
    f();
    return SEPCOV_OK;
  } catch (const sepcov::Error& e) {
    return fail(static_cast<sepcov_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SEPCOV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SEPCOV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SEPCOV_ERR_INTERNAL, "unknown error");
  }
}

sepcov::Matrix read_square(const double* p, size_t d) {
  return Eigen::Map<const sepcov::Matrix>(p, static_cast<sepcov::Index>(d),
                                          static_cast<sepcov::Index>(d));
}

void write_square(const sepcov::Matrix& m, double* out) {
  if (out == nullptr) return;
  Eigen::Map<sepcov::Matrix>(out, m.rows(), m.cols()) = m;
}

sepcov::PriorSpec to_prior(const sepcov_prior& p, size_t d) {
  const auto di = static_cast<sepcov::Index>(d);
  switch (p.kind) {
    case SEPCOV_PRIOR_IW:
      return sepcov::IwPrior{p.nu, p.scale * sepcov::Matrix::Identity(di, di)};
    case SEPCOV_PRIOR_SIW:
      return sepcov::SiwPrior{p.a, p.c};
    case SEPCOV_PRIOR_REFERENCE:
      return sepcov::ReferencePrior{};
  }
  throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "unknown prior kind");
}

sepcov::MetricKind to_metric(const sepcov_run_config& c) {
  switch (c.metric) {
    case SEPCOV_METRIC_REGULARIZED: return sepcov::Regularized{c.alpha};
    case SEPCOV_METRIC_ORTHOGONALIZED: return sepcov::Orthogonalized{};
    case SEPCOV_METRIC_WEIGHTED: return sepcov::Weighted{c.omega};
    case SEPCOV_METRIC_PRODUCT: return sepcov::Product{};
  }
  throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "unknown metric kind");
}

sepcov::Index to_index(size_t n) { return static_cast<sepcov::Index>(n); }

}  // namespace

extern "C" {

const char* sepcov_version(void) { return "0.1.0"; }

const char* sepcov_last_error(void) { return g_last_error.c_str(); }

const char* sepcov_status_name(sepcov_status status) {
  switch (status) {
    case SEPCOV_OK: return "ok";
    case SEPCOV_ERR_NULL_ARGUMENT: return "null argument";
    case SEPCOV_ERR_INTERNAL: return "internal error";
    default:
      if (status >= SEPCOV_ERR_INVALID_ARGUMENT && status <= SEPCOV_ERR_IO) {
        return sepcov::error_code_name(static_cast<sepcov::ErrorCode>(status));
      }
      return "unknown status";
  }
}

sepcov_status sepcov_state_create(const double* sigma1, size_t d1, const double* sigma2,
                                  size_t d2, sepcov_state** out) {
  if (sigma1 == nullptr || sigma2 == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_state_create: NULL argument");
  }
  return guarded([&] {
    if (d1 == 0 || d2 == 0) {
      throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "dimensions must be >= 1");
    }
    *out = new sepcov_state{sepcov::SeparableState{sepcov::SpdMatrix(read_square(sigma1, d1)),
                                                   sepcov::SpdMatrix(read_square(sigma2, d2))}};
  });
}

sepcov_status sepcov_state_dims(const sepcov_state* state, size_t* d1, size_t* d2) {
  if (state == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_state_dims: NULL state");
  if (d1 != nullptr) *d1 = static_cast<size_t>(state->state.d1());
  if (d2 != nullptr) *d2 = static_cast<size_t>(state->state.d2());
  return SEPCOV_OK;
}

sepcov_status sepcov_state_factors(const sepcov_state* state, double* sigma1, double* sigma2) {
  if (state == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_state_factors: NULL state");
  write_square(state->state.sigma1.matrix(), sigma1);
  write_square(state->state.sigma2.matrix(), sigma2);
  return SEPCOV_OK;
}

void sepcov_state_free(sepcov_state* state) { delete state; }

sepcov_status sepcov_dataset_from_rows(const double* rows, size_t n, size_t d1, size_t d2,
                                       sepcov_dataset** out) {
  if (out == nullptr || (rows == nullptr && n > 0)) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_dataset_from_rows: NULL argument");
  }
  return guarded([&] {
    if (d1 == 0 || d2 == 0) {
      throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "dimensions must be >= 1");
    }
    if (n == 0) {
      *out = new sepcov_dataset{
          std::make_shared<const sepcov::Dataset>(sepcov::Dataset::empty(to_index(d1), to_index(d2)))};
      return;
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const sepcov::Matrix obs = Eigen::Map<const RowMajor>(rows, to_index(n), to_index(d1 * d2));
    if (!obs.allFinite()) {
      throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "observations must be finite");
    }
    *out = new sepcov_dataset{std::make_shared<const sepcov::Dataset>(
        sepcov::Dataset::from_observations(obs, to_index(d1), to_index(d2)))};
  });
}

sepcov_status sepcov_generate(size_t d1, size_t d2, size_t n, double gamma, uint64_t seed,
                              sepcov_state** truth, sepcov_dataset** data) {
  if (truth == nullptr || data == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_generate: NULL output");
  }
  return guarded([&] {
    if (!(gamma > 0.0)) throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "gamma must be > 0");
    sepcov::Rng rng = sepcov::make_stream(seed, 0);
    sepcov::SeparableState t = sepcov::sample_truth(to_index(d1), to_index(d2), gamma, rng);
    auto ds = std::make_shared<const sepcov::Dataset>(
        sepcov::sample_matrix_normal(t, to_index(n), rng));
    *truth = new sepcov_state{std::move(t)};
    *data = new sepcov_dataset{std::move(ds)};
  });
}

sepcov_status sepcov_dataset_info(const sepcov_dataset* data, size_t* n, size_t* d1, size_t* d2,
                                  size_t* pvl_rank) {
  if (data == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_dataset_info: NULL data");
  if (n != nullptr) *n = static_cast<size_t>(data->data->n());
  if (d1 != nullptr) *d1 = static_cast<size_t>(data->data->d1());
  if (d2 != nullptr) *d2 = static_cast<size_t>(data->data->d2());
  if (pvl_rank != nullptr) *pvl_rank = static_cast<size_t>(data->data->pvl().rank());
  return SEPCOV_OK;
}

sepcov_status sepcov_dataset_rows(const sepcov_dataset* data, double* out) {
  if (data == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_dataset_rows: NULL argument");
  }
  return guarded([&] {
    const auto& obs = data->data->observations();
    if (!obs) return;
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor>(out, obs->rows(), obs->cols()) = *obs;
  });
}

void sepcov_dataset_free(sepcov_dataset* data) { delete data; }

sepcov_status sepcov_nll(const sepcov_state* state, const sepcov_dataset* data, double* out) {
  if (state == nullptr || data == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_nll: NULL argument");
  }
  return guarded([&] { *out = sepcov::nll(state->state, *data->data); });
}

sepcov_status sepcov_flipflop(const sepcov_dataset* data, double tol, size_t max_iter,
                              sepcov_state** out, int* converged, size_t* iterations) {
  if (data == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_flipflop: NULL argument");
  }
  return guarded([&] {
    sepcov::FlipFlopResult r = sepcov::flipflop_mle(*data->data, tol, to_index(max_iter));
    if (converged != nullptr) *converged = r.converged ? 1 : 0;
    if (iterations != nullptr) *iterations = static_cast<size_t>(r.iterations);
    *out = new sepcov_state{std::move(r.state)};
  });
}

sepcov_status sepcov_prior_default(sepcov_prior_kind kind, size_t d, double gamma,
                                   sepcov_prior* out) {
  if (out == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_prior_default: NULL output");
  return guarded([&] {
    if (d == 0 || !(gamma > 0.0)) {
      throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "need d >= 1 and gamma > 0");
    }
    const sepcov::IwPrior iw = sepcov::default_iw_prior(to_index(d), gamma);
    const sepcov::SiwPrior siw = sepcov::moment_matched_siw(to_index(d), gamma);
    if (kind != SEPCOV_PRIOR_IW && kind != SEPCOV_PRIOR_SIW && kind != SEPCOV_PRIOR_REFERENCE) {
      throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "unknown prior kind");
    }
    *out = sepcov_prior{kind, iw.nu, iw.scale(0, 0), siw.a, siw.c};
  });
}

sepcov_status sepcov_run_config_default(size_t d1, size_t d2, double gamma,
                                        sepcov_run_config* out) {
  if (out == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_run_config_default: NULL output");
  sepcov_run_config c{};
  const sepcov::SamplerConfig def;
  c.sampler = SEPCOV_SAMPLER_SGLMC;
  c.metric = SEPCOV_METRIC_REGULARIZED;
  c.alpha = sepcov::Regularized{}.alpha;
  c.omega = sepcov::Weighted{}.omega;
  c.restricted_slice = 0;
  if (sepcov_status s = sepcov_prior_default(SEPCOV_PRIOR_IW, d1, gamma, &c.prior1); s != SEPCOV_OK) {
    return s;
  }
  if (sepcov_status s = sepcov_prior_default(SEPCOV_PRIOR_IW, d2, gamma, &c.prior2); s != SEPCOV_OK) {
    return s;
  }
  c.n_adapt = static_cast<size_t>(def.n_adapt);
  c.n_burn = static_cast<size_t>(def.n_burn);
  c.n_samples = static_cast<size_t>(def.n_samples);
  c.thin = static_cast<size_t>(def.thin);
  c.dynamic_steps = 0;
  c.leapfrog_steps = static_cast<size_t>(sepcov::FixedSteps{}.steps);
  c.epsilon0 = def.epsilon0;
  c.target_accept = def.target_accept;
  c.seed = def.seed;
  c.tempering_chains = 0;
  c.tempering_c1 = sepcov::Tempering{}.c1;
  c.init = nullptr;
  *out = c;
  return SEPCOV_OK;
}

sepcov_status sepcov_run(const sepcov_dataset* data, const sepcov_run_config* config,
                         sepcov_chain** out) {
  if (data == nullptr || config == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_run: NULL argument");
  }
  return guarded([&] {
    const sepcov_run_config& c = *config;
    const size_t d1 = static_cast<size_t>(data->data->d1());
    const size_t d2 = static_cast<size_t>(data->data->d2());
    sepcov::TargetDensity target{data->data, to_prior(c.prior1, d1), to_prior(c.prior2, d2),
                                 to_metric(c)};
    if (c.restricted_slice != 0) target.slice = sepcov::SliceDensity::kRestricted;
    sepcov::SamplerConfig sc;
    switch (c.sampler) {
      case SEPCOV_SAMPLER_GIBBS: sc.sampler = sepcov::SamplerKind::kGibbs; break;
      case SEPCOV_SAMPLER_SGLMC: sc.sampler = sepcov::SamplerKind::kSglmc; break;
      default: throw sepcov::Error(sepcov::ErrorCode::kInvalidArgument, "unknown sampler");
    }
    sc.n_adapt = to_index(c.n_adapt);
    sc.n_burn = to_index(c.n_burn);
    sc.n_samples = to_index(c.n_samples);
    sc.thin = to_index(c.thin);
    if (c.dynamic_steps != 0) {
      sc.leapfrog = sepcov::DynamicSteps{to_index(c.leapfrog_steps)};
    } else {
      sc.leapfrog = sepcov::FixedSteps{to_index(c.leapfrog_steps)};
    }
    sc.epsilon0 = c.epsilon0;
    sc.target_accept = c.target_accept;
    sc.seed = c.seed;
    if (c.tempering_chains > 1) {
      sc.tempering = sepcov::Tempering{to_index(c.tempering_chains), c.tempering_c1};
    }
    std::optional<sepcov::SeparableState> init;
    if (c.init != nullptr) init = c.init->state;

    auto chain = std::make_unique<sepcov_chain>();
    chain->run = sepcov::run_chain(sc, target, init);
    chain->summaries.reserve(chain->run.samples.size());
    for (const auto& s : chain->run.samples) chain->summaries.push_back(sepcov::summarize(s.state));
    *out = chain.release();
  });
}

size_t sepcov_chain_length(const sepcov_chain* chain) {
  return chain == nullptr ? 0 : chain->run.samples.size();
}

sepcov_status sepcov_chain_record_at(const sepcov_chain* chain, size_t i,
                                     sepcov_chain_record* out) {
  if (chain == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_chain_record_at: NULL argument");
  }
  if (i >= chain->run.samples.size()) {
    return fail(SEPCOV_ERR_INVALID_ARGUMENT, "sepcov_chain_record_at: index out of range");
  }
  const sepcov::ChainSample& s = chain->run.samples[i];
  out->accepted = s.accepted ? 1 : 0;
  out->epsilon = s.epsilon;
  out->steps = static_cast<size_t>(s.steps);
  out->delta_energy = s.delta_energy;
  out->accept_prob = s.accept_prob;
  for (size_t k = 0; k < SEPCOV_SUMMARY_COLUMNS; ++k) {
    out->summary[k] = sepcov::summary_value(chain->summaries[i], k);
  }
  return SEPCOV_OK;
}

sepcov_status sepcov_chain_factors(const sepcov_chain* chain, size_t i, double* sigma1,
                                   double* sigma2) {
  if (chain == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_chain_factors: NULL chain");
  if (i >= chain->run.samples.size()) {
    return fail(SEPCOV_ERR_INVALID_ARGUMENT, "sepcov_chain_factors: index out of range");
  }
  write_square(chain->run.samples[i].state.sigma1.matrix(), sigma1);
  write_square(chain->run.samples[i].state.sigma2.matrix(), sigma2);
  return SEPCOV_OK;
}

sepcov_status sepcov_chain_stats(const sepcov_chain* chain, double* epsilon,
                                 size_t* rejected_on_error, size_t* swaps_proposed,
                                 size_t* swaps_accepted) {
  if (chain == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_chain_stats: NULL chain");
  if (epsilon != nullptr) *epsilon = chain->run.epsilon;
  if (rejected_on_error != nullptr) {
    *rejected_on_error = static_cast<size_t>(chain->run.rejected_on_error);
  }
  if (swaps_proposed != nullptr) *swaps_proposed = static_cast<size_t>(chain->run.swaps_proposed);
  if (swaps_accepted != nullptr) *swaps_accepted = static_cast<size_t>(chain->run.swaps_accepted);
  return SEPCOV_OK;
}

void sepcov_chain_free(sepcov_chain* chain) { delete chain; }

const char* sepcov_summary_column(size_t i) {
  return i < sepcov::kSummaryColumns.size() ? sepcov::kSummaryColumns[i] : nullptr;
}

sepcov_status sepcov_summarize(const sepcov_state* state, double out[SEPCOV_SUMMARY_COLUMNS]) {
  if (state == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_summarize: NULL argument");
  }
  return guarded([&] {
    const sepcov::SummaryRecord r = sepcov::summarize(state->state);
    for (size_t k = 0; k < SEPCOV_SUMMARY_COLUMNS; ++k) out[k] = sepcov::summary_value(r, k);
  });
}

sepcov_status sepcov_acf(const double* x, size_t n, size_t max_lag, double* out) {
  if (x == nullptr || out == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_acf: NULL argument");
  return guarded([&] {
    const std::vector<double> r = sepcov::acf(std::vector<double>(x, x + n), max_lag);
    std::copy(r.begin(), r.end(), out);
  });
}

sepcov_status sepcov_ess(const double* x, size_t n, double* out) {
  if (x == nullptr || out == nullptr) return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_ess: NULL argument");
  return guarded([&] { *out = sepcov::ess(std::vector<double>(x, x + n)); });
}

sepcov_status sepcov_ks(const double* a, size_t na, const double* b, size_t nb, double* out) {
  if (a == nullptr || b == nullptr || out == nullptr) {
    return fail(SEPCOV_ERR_NULL_ARGUMENT, "sepcov_ks: NULL argument");
  }
  return guarded([&] {
    *out = sepcov::two_sample_ks(std::vector<double>(a, a + na), std::vector<double>(b, b + nb));
  });
}

}  // extern "C"
