#pragma once

// Per-sample summaries and single-chain diagnostics.

#include "sepcov/model.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace sepcov {

struct SummaryRecord {
  double tr1 = 0.0;
  double tr2 = 0.0;
  double tr_kron = 0.0;
  double logdet1 = 0.0;
  double logdet2 = 0.0;
  double logdet_kron = 0.0;
  double cond1 = 0.0;
  double cond2 = 0.0;
};

inline constexpr std::array<const char*, 8> kSummaryColumns = {
    "tr1", "tr2", "tr_kron", "logdet1", "logdet2", "logdet_kron", "cond1", "cond2"};

// Column i of kSummaryColumns.
double summary_value(const SummaryRecord& r, std::size_t i);

// Kronecker statistics come from tr(A (x) B) = tr A tr B and
// log|A (x) B| = d2 log|A| + d1 log|B|.
SummaryRecord summarize(const SeparableState& state);

// Biased (1/n) autocovariance normalized by lag 0; lags 0..max_lag.
// A constant series has acf 1 at lag 0 and 0 elsewhere.
std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag);

// n / tau with tau from Geyer's initial positive sequence, tau >= 1/3.
double ess(const std::vector<double>& series);

// sup |F_a - F_b| of the empirical distribution functions.
double two_sample_ks(std::vector<double> a, std::vector<double> b);

}  // namespace sepcov
