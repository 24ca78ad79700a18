#ifndef SEPCOV_SEPCOV_H
#define SEPCOV_SEPCOV_H

/*
 * C interface to the separable covariance sampler library.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function (NULL is accepted). Every fallible call returns a
 * sepcov_status; on failure sepcov_last_error() describes the problem for the
 * calling thread until its next failing call.
 *
 * Matrices are passed as column-major d x d arrays. Observation rows hold
 * vec(Y_i) of the d2 x d1 observation Y_i, so column j of a row is entry
 * (j % d2, j / d2) of Y_i.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(SEPCOV_BUILDING)
#define SEPCOV_API __attribute__((visibility("default")))
#else
#define SEPCOV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sepcov_status {
  SEPCOV_OK = 0,
  SEPCOV_ERR_INVALID_ARGUMENT = 1,
  SEPCOV_ERR_DIMENSION_MISMATCH = 2,
  SEPCOV_ERR_NOT_SYMMETRIC = 3,
  SEPCOV_ERR_NOT_POSITIVE_DEFINITE = 4,
  SEPCOV_ERR_EIG_FAILURE = 5,
  SEPCOV_ERR_NEAR_DEGENERATE_EIGENVALUES = 6,
  SEPCOV_ERR_NON_CONJUGATE_PRIOR = 7,
  SEPCOV_ERR_SIZE_CAP = 8,
  SEPCOV_ERR_EMPTY_DATA = 9,
  SEPCOV_ERR_SVD_FAILURE = 10,
  SEPCOV_ERR_MAX_ITER_EXCEEDED = 11,
  SEPCOV_ERR_IO = 12,
  SEPCOV_ERR_NULL_ARGUMENT = 50,
  SEPCOV_ERR_INTERNAL = 99
} sepcov_status;

typedef struct sepcov_state sepcov_state;
typedef struct sepcov_dataset sepcov_dataset;
typedef struct sepcov_chain sepcov_chain;

SEPCOV_API const char* sepcov_version(void);
SEPCOV_API const char* sepcov_last_error(void);
SEPCOV_API const char* sepcov_status_name(sepcov_status status);

/* States (Sigma1, Sigma2) */

SEPCOV_API sepcov_status sepcov_state_create(const double* sigma1, size_t d1,
                                             const double* sigma2, size_t d2,
                                             sepcov_state** out);
SEPCOV_API sepcov_status sepcov_state_dims(const sepcov_state* state, size_t* d1, size_t* d2);
/* Either output may be NULL. */
SEPCOV_API sepcov_status sepcov_state_factors(const sepcov_state* state, double* sigma1,
                                              double* sigma2);
SEPCOV_API void sepcov_state_free(sepcov_state* state);

/* Datasets */

/* rows: n x (d1*d2), row-major. */
SEPCOV_API sepcov_status sepcov_dataset_from_rows(const double* rows, size_t n, size_t d1,
                                                  size_t d2, sepcov_dataset** out);
/* Draws Sigma_i ~ IW(d_i + 10, (sqrt(gamma)/d_i) I) and then n observations,
 * all from stream 0 of `seed`. */
SEPCOV_API sepcov_status sepcov_generate(size_t d1, size_t d2, size_t n, double gamma,
                                         uint64_t seed, sepcov_state** truth,
                                         sepcov_dataset** data);
SEPCOV_API sepcov_status sepcov_dataset_info(const sepcov_dataset* data, size_t* n, size_t* d1,
                                             size_t* d2, size_t* pvl_rank);
/* Copies the n x (d1*d2) observations, row-major. */
SEPCOV_API sepcov_status sepcov_dataset_rows(const sepcov_dataset* data, double* out);
SEPCOV_API void sepcov_dataset_free(sepcov_dataset* data);

/* Negative log-likelihood up to a constant. */
SEPCOV_API sepcov_status sepcov_nll(const sepcov_state* state, const sepcov_dataset* data,
                                    double* out);
/* Flip-flop MLE normalized to |Sigma2| = 1. converged / iterations may be NULL. */
SEPCOV_API sepcov_status sepcov_flipflop(const sepcov_dataset* data, double tol,
                                         size_t max_iter, sepcov_state** out, int* converged,
                                         size_t* iterations);

/* Sampling */

typedef enum sepcov_sampler { SEPCOV_SAMPLER_GIBBS = 0, SEPCOV_SAMPLER_SGLMC = 1 } sepcov_sampler;

typedef enum sepcov_metric {
  SEPCOV_METRIC_REGULARIZED = 0,
  SEPCOV_METRIC_ORTHOGONALIZED = 1,
  SEPCOV_METRIC_WEIGHTED = 2,
  SEPCOV_METRIC_PRODUCT = 3
} sepcov_metric;

typedef enum sepcov_prior_kind {
  SEPCOV_PRIOR_IW = 0,
  SEPCOV_PRIOR_SIW = 1,
  SEPCOV_PRIOR_REFERENCE = 2
} sepcov_prior_kind;

/* IW(nu, scale * I); SIW with a and H = c I. */
typedef struct sepcov_prior {
  sepcov_prior_kind kind;
  double nu;
  double scale;
  double a;
  double c;
} sepcov_prior;

/* IW(d + 2, gamma/d I), or the SIW moment-matched to it. */
SEPCOV_API sepcov_status sepcov_prior_default(sepcov_prior_kind kind, size_t d, double gamma,
                                              sepcov_prior* out);

typedef struct sepcov_run_config {
  sepcov_sampler sampler;
  sepcov_metric metric;
  double alpha;
  double omega;
  /* Constrained metrics only. 0: target the normalized posterior,
     1: likelihood and priors restricted to |Sigma2| = 1. */
  int restricted_slice;
  sepcov_prior prior1;
  sepcov_prior prior2;
  size_t n_adapt;
  size_t n_burn;
  size_t n_samples;
  size_t thin;
  int dynamic_steps;     /* 0: fixed L, 1: dynamic with L_max = leapfrog_steps */
  size_t leapfrog_steps;
  double epsilon0;
  double target_accept;
  uint64_t seed;
  size_t tempering_chains; /* 0 or 1: off */
  double tempering_c1;
  const sepcov_state* init; /* NULL: start at the flip-flop MLE */
} sepcov_run_config;

/* Defaults for a d1 x d2 problem with prior scale gamma. */
SEPCOV_API sepcov_status sepcov_run_config_default(size_t d1, size_t d2, double gamma,
                                                   sepcov_run_config* out);
SEPCOV_API sepcov_status sepcov_run(const sepcov_dataset* data, const sepcov_run_config* config,
                                    sepcov_chain** out);

#define SEPCOV_SUMMARY_COLUMNS 8

typedef struct sepcov_chain_record {
  int accepted;
  double epsilon;
  size_t steps;
  double delta_energy;
  double accept_prob;
  /* tr1, tr2, tr_kron, logdet1, logdet2, logdet_kron, cond1, cond2 */
  double summary[SEPCOV_SUMMARY_COLUMNS];
} sepcov_chain_record;

SEPCOV_API size_t sepcov_chain_length(const sepcov_chain* chain);
SEPCOV_API sepcov_status sepcov_chain_record_at(const sepcov_chain* chain, size_t i,
                                                sepcov_chain_record* out);
/* Either output may be NULL. */
SEPCOV_API sepcov_status sepcov_chain_factors(const sepcov_chain* chain, size_t i,
                                              double* sigma1, double* sigma2);
/* Any output may be NULL. */
SEPCOV_API sepcov_status sepcov_chain_stats(const sepcov_chain* chain, double* epsilon,
                                            size_t* rejected_on_error, size_t* swaps_proposed,
                                            size_t* swaps_accepted);
SEPCOV_API void sepcov_chain_free(sepcov_chain* chain);

/* Diagnostics */

SEPCOV_API const char* sepcov_summary_column(size_t i);
SEPCOV_API sepcov_status sepcov_summarize(const sepcov_state* state,
                                          double out[SEPCOV_SUMMARY_COLUMNS]);
/* out has max_lag + 1 entries. */
SEPCOV_API sepcov_status sepcov_acf(const double* x, size_t n, size_t max_lag, double* out);
SEPCOV_API sepcov_status sepcov_ess(const double* x, size_t n, double* out);
SEPCOV_API sepcov_status sepcov_ks(const double* a, size_t na, const double* b, size_t nb,
                                   double* out);

#ifdef __cplusplus
}
#endif

#endif
