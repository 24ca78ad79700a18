#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepcov/sepcov.h"

namespace sepcov_cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitThreshold = 4;

class CliError : public std::runtime_error {
 public:
  CliError(int exit_code, const std::string& what)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

// Throws CliError carrying the library message. Argument-type failures map to
// the config exit code, everything else to the data exit code.
void check(sepcov_status status, const char* context);

struct PriorConfig {
  std::string kind = "iw";
  // Unset hyperparameters (NaN) fall back to the defaults for gamma.
  double nu;
  double scale;
  double a;
  double c;
  PriorConfig();
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t d1 = 15;
  std::size_t d2 = 6;
  bool dims_set = false;  // d1 or d2 given explicitly
  std::size_t n = 300;
  double gamma = 5.0;
  std::string sampler = "sglmc";
  std::string metric = "regularized";
  double alpha = 0.95;
  double omega = 0.5;
  std::string slice = "quotient";
  PriorConfig prior1;
  PriorConfig prior2;
  std::size_t n_adapt = 500;
  std::size_t n_burn = 500;
  std::size_t n_samples = 2000;
  std::size_t thin = 1;
  std::string leapfrog = "fixed";
  std::size_t steps = 10;
  std::size_t max_steps = 1024;
  double epsilon0 = 0.1;
  double target_accept = 0.8;
  std::size_t tempering_chains = 0;
  double tempering_c1 = 0.5;
  std::string input;
  std::string output = ".";
  bool dump_factors = false;
};

// Reads a JSON config file over the defaults. Unknown keys are errors.
RunConfig load_config(const std::string& path);
void validate(const RunConfig& config);
sepcov_run_config to_run_config(const RunConfig& config);
std::string describe_metric(const RunConfig& config);

struct Table {
  std::vector<std::string> comments;  // lines starting with '#', without the '#'
  std::vector<std::string> columns;   // empty when the file has no header row
  std::vector<std::vector<double>> rows;
};

// Comma-separated numbers; '#' lines are comments, an optional first
// non-comment row of names is the header.
Table read_table(const std::string& path);
std::string format_double(double x);

inline constexpr const char* kChainsSchema = "sepcov-chains v1";
inline constexpr const char* kAcfSchema = "sepcov-acf v1";
inline constexpr const char* kDataSchema = "sepcov-data v1";

}  // namespace sepcov_cli
