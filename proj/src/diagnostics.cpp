#include "sepcov/diagnostics.hpp"

#include "sepcov/error.hpp"

#include <algorithm>
#include <cmath>

namespace sepcov {

double summary_value(const SummaryRecord& r, std::size_t i) {
  switch (i) {
    case 0: return r.tr1;
    case 1: return r.tr2;
    case 2: return r.tr_kron;
    case 3: return r.logdet1;
    case 4: return r.logdet2;
    case 5: return r.logdet_kron;
    case 6: return r.cond1;
    case 7: return r.cond2;
    default: throw Error(ErrorCode::kInvalidArgument, "summary_value: column out of range");
  }
}

SummaryRecord summarize(const SeparableState& state) {
  const double d1 = static_cast<double>(state.d1());
  const double d2 = static_cast<double>(state.d2());
  SummaryRecord r;
  r.tr1 = state.sigma1.matrix().trace();
  r.tr2 = state.sigma2.matrix().trace();
  r.tr_kron = r.tr1 * r.tr2;
  r.logdet1 = state.sigma1.log_det();
  r.logdet2 = state.sigma2.log_det();
  r.logdet_kron = d2 * r.logdet1 + d1 * r.logdet2;
  r.cond1 = state.sigma1.max_eigenvalue() / state.sigma1.min_eigenvalue();
  r.cond2 = state.sigma2.max_eigenvalue() / state.sigma2.min_eigenvalue();
  return r;
}

namespace {

class Autocovariance {
 public:
  explicit Autocovariance(const std::vector<double>& x) : x_(x.size()) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x_[i] = x[i] - mean;
  }

  double at(std::size_t lag) const {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < x_.size(); ++i) s += x_[i] * x_[i + lag];
    return s / static_cast<double>(x_.size());
  }

 private:
  std::vector<double> x_;
};

}  // namespace

std::vector<double> acf(const std::vector<double>& series, std::size_t max_lag) {
  if (series.size() <= max_lag) {
    throw Error(ErrorCode::kInvalidArgument, "acf: series must be longer than max_lag");
  }
  const Autocovariance cov(series);
  const double c0 = cov.at(0);
  std::vector<double> out(max_lag + 1, 0.0);
  out[0] = 1.0;
  if (c0 <= 0.0) return out;
  for (std::size_t k = 1; k <= max_lag; ++k) out[k] = cov.at(k) / c0;
  return out;
}

double ess(const std::vector<double>& series) {
  const std::size_t n = series.size();
  if (n < 10) throw Error(ErrorCode::kInvalidArgument, "ess: need at least 10 values");
  const Autocovariance cov(series);
  const double c0 = cov.at(0);
  if (c0 <= 0.0) return static_cast<double>(n);
  // tau = -1 + 2 sum_k (rho_2k + rho_2k+1) over the initial positive run.
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (cov.at(2 * k) + cov.at(2 * k + 1)) / c0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / 3.0);
  return static_cast<double>(n) / tau;
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kEmptyData, "ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace sepcov
