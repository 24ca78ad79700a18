// sepcov: generate data, fit separable covariance models and inspect chains.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cli_common.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sepcov_cli;

namespace {

struct StateDeleter {
  void operator()(sepcov_state* s) const { sepcov_state_free(s); }
};
struct DatasetDeleter {
  void operator()(sepcov_dataset* d) const { sepcov_dataset_free(d); }
};
struct ChainDeleter {
  void operator()(sepcov_chain* c) const { sepcov_chain_free(c); }
};
using StatePtr = std::unique_ptr<sepcov_state, StateDeleter>;
using DatasetPtr = std::unique_ptr<sepcov_dataset, DatasetDeleter>;
using ChainPtr = std::unique_ptr<sepcov_chain, ChainDeleter>;

const std::vector<std::string> kChainColumns = {
    "iter", "accepted", "epsilon", "L_used", "tr1", "tr2", "tr_kron", "logdet1", "logdet2",
    "logdet_kron", "cond1", "cond2"};

std::vector<std::string> summary_columns() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < SEPCOV_SUMMARY_COLUMNS; ++i) out.emplace_back(sepcov_summary_column(i));
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError(kExitData, "cannot create '" + dir + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw CliError(kExitData, "cannot write '" + path.string() + "'");
  return out;
}

json matrix_json(const std::vector<double>& m, std::size_t d) {
  json rows = json::array();
  for (std::size_t i = 0; i < d; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < d; ++j) row.push_back(m[i + j * d]);
    rows.push_back(row);
  }
  return rows;
}

void write_dump(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

std::pair<StatePtr, DatasetPtr> generate(const RunConfig& c) {
  sepcov_state* truth = nullptr;
  sepcov_dataset* data = nullptr;
  check(sepcov_generate(c.d1, c.d2, c.n, c.gamma, c.seed, &truth, &data), "generate");
  return {StatePtr(truth), DatasetPtr(data)};
}

// Picks up "d1=.. d2=.." from a sepcov-data header comment.
void dims_from_comments(const Table& t, RunConfig& c) {
  for (const auto& line : t.comments) {
    if (line.rfind(kDataSchema, 0) != 0) continue;
    std::istringstream ss(line.substr(std::string(kDataSchema).size()));
    std::string tok;
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    while (ss >> tok) {
      if (tok.rfind("d1=", 0) == 0) d1 = std::stoul(tok.substr(3));
      if (tok.rfind("d2=", 0) == 0) d2 = std::stoul(tok.substr(3));
    }
    if (d1 == 0 || d2 == 0) return;
    if (c.dims_set && (d1 != c.d1 || d2 != c.d2)) {
      throw CliError(kExitData, "data header dimensions differ from the configured d1, d2");
    }
    c.d1 = d1;
    c.d2 = d2;
  }
}

DatasetPtr load_data(RunConfig& c) {
  const Table t = read_table(c.input);
  dims_from_comments(t, c);
  if (t.rows.empty()) throw CliError(kExitData, "'" + c.input + "' has no observations");
  if (t.rows[0].size() != c.d1 * c.d2) {
    throw CliError(kExitData, "'" + c.input + "' has " + std::to_string(t.rows[0].size()) +
                                  " columns, expected d1*d2 = " + std::to_string(c.d1 * c.d2));
  }
  std::vector<double> flat;
  flat.reserve(t.rows.size() * c.d1 * c.d2);
  for (const auto& r : t.rows) flat.insert(flat.end(), r.begin(), r.end());
  if (!std::all_of(flat.begin(), flat.end(), [](double v) { return std::isfinite(v); })) {
    throw CliError(kExitData, "'" + c.input + "' contains non-finite values");
  }
  sepcov_dataset* data = nullptr;
  check(sepcov_dataset_from_rows(flat.data(), t.rows.size(), c.d1, c.d2, &data), "data");
  return DatasetPtr(data);
}

int cmd_generate(RunConfig c) {
  validate(c);
  auto [truth, data] = generate(c);
  ensure_dir(c.output);
  std::vector<double> rows(c.n * c.d1 * c.d2);
  check(sepcov_dataset_rows(data.get(), rows.data()), "generate");
  {
    auto out = open_out(fs::path(c.output) / "data.csv");
    out << "# " << kDataSchema << " d1=" << c.d1 << " d2=" << c.d2 << " n=" << c.n
        << " seed=" << c.seed << "\n";
    const std::size_t w = c.d1 * c.d2;
    for (std::size_t i = 0; i < c.n; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        if (j) out << ',';
        out << format_double(rows[i * w + j]);
      }
      out << '\n';
    }
  }
  std::vector<double> s1(c.d1 * c.d1);
  std::vector<double> s2(c.d2 * c.d2);
  check(sepcov_state_factors(truth.get(), s1.data(), s2.data()), "generate");
  json tj = {{"d1", c.d1}, {"d2", c.d2}, {"n", c.n}, {"gamma", c.gamma}, {"seed", c.seed},
             {"sigma1", matrix_json(s1, c.d1)}, {"sigma2", matrix_json(s2, c.d2)}};
  write_dump((fs::path(c.output) / "truth.json").string(), tj);
  std::cout << "wrote " << c.n << " observations (" << c.d1 << " x " << c.d2 << ") to "
            << c.output << "\n";
  return kExitOk;
}

std::vector<double> vech(const std::vector<double>& m, std::size_t d) {
  std::vector<double> out;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = j; i < d; ++i) out.push_back(m[i + j * d]);
  }
  return out;
}

int cmd_fit(RunConfig c) {
  DatasetPtr data;
  std::string source;
  if (!c.input.empty()) {
    data = load_data(c);
    source = c.input;
  } else {
    validate(c);
    data = generate(c).second;
    source = "generated";
  }
  validate(c);
  const sepcov_run_config rc = to_run_config(c);

  const auto t0 = std::chrono::steady_clock::now();
  sepcov_chain* raw = nullptr;
  check(sepcov_run(data.get(), &rc, &raw), "fit");
  ChainPtr chain(raw);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ensure_dir(c.output);
  const std::size_t len = sepcov_chain_length(chain.get());
  std::vector<std::vector<double>> cols(SEPCOV_SUMMARY_COLUMNS, std::vector<double>(len));
  std::size_t accepted = 0;
  {
    auto out = open_out(fs::path(c.output) / "chains.csv");
    out << "# " << kChainsSchema << "\n";
    for (std::size_t k = 0; k < kChainColumns.size(); ++k) {
      out << (k ? "," : "") << kChainColumns[k];
    }
    out << "\n";
    for (std::size_t i = 0; i < len; ++i) {
      sepcov_chain_record r{};
      check(sepcov_chain_record_at(chain.get(), i, &r), "fit");
      accepted += static_cast<std::size_t>(r.accepted);
      out << i << ',' << r.accepted << ',' << format_double(r.epsilon) << ',' << r.steps;
      for (std::size_t k = 0; k < SEPCOV_SUMMARY_COLUMNS; ++k) {
        out << ',' << format_double(r.summary[k]);
        cols[k][i] = r.summary[k];
      }
      out << '\n';
    }
  }
  if (c.dump_factors) {
    auto out = open_out(fs::path(c.output) / "factors.csv");
    out << "# sepcov-factors v1 d1=" << c.d1 << " d2=" << c.d2
        << " columns: iter, vech(sigma1), vech(sigma2)\n";
    std::vector<double> s1(c.d1 * c.d1);
    std::vector<double> s2(c.d2 * c.d2);
    for (std::size_t i = 0; i < len; ++i) {
      check(sepcov_chain_factors(chain.get(), i, s1.data(), s2.data()), "fit");
      out << i;
      for (double v : vech(s1, c.d1)) out << ',' << format_double(v);
      for (double v : vech(s2, c.d2)) out << ',' << format_double(v);
      out << '\n';
    }
  }

  double eps = 0.0;
  std::size_t rejected = 0;
  std::size_t swaps = 0;
  std::size_t swaps_ok = 0;
  check(sepcov_chain_stats(chain.get(), &eps, &rejected, &swaps, &swaps_ok), "fit");
  json ess = json::object();
  json ess_it = json::object();
  const auto names = summary_columns();
  for (std::size_t k = 0; k < SEPCOV_SUMMARY_COLUMNS; ++k) {
    double e = 0.0;
    if (len >= 10 && sepcov_ess(cols[k].data(), len, &e) == SEPCOV_OK) {
      ess[names[k]] = e;
      ess_it[names[k]] = e / static_cast<double>(len);
    } else {
      ess[names[k]] = nullptr;
      ess_it[names[k]] = nullptr;
    }
  }
  json summary = {
      {"schema", "sepcov-summary v1"},
      {"data", source},
      {"d1", c.d1},
      {"d2", c.d2},
      {"sampler", c.sampler},
      {"metric", describe_metric(c)},
      {"seed", c.seed},
      {"n_samples", len},
      {"acceptance_rate", len ? static_cast<double>(accepted) / static_cast<double>(len) : 0.0},
      {"epsilon", eps},
      {"rejected_on_error", rejected},
      {"swaps_proposed", swaps},
      {"swaps_accepted", swaps_ok},
      {"ess", ess},
      {"ess_per_it", ess_it},
      {"wall_time_sec", wall},
  };
  write_dump((fs::path(c.output) / "summary.json").string(), summary);
  std::cout << describe_metric(c) << ": " << len << " samples, acceptance "
            << summary["acceptance_rate"].get<double>() << ", " << wall << " s -> " << c.output
            << "\n";
  return kExitOk;
}

struct Chains {
  std::string path;
  std::map<std::string, std::vector<double>> columns;
  std::size_t length = 0;
};

Chains read_chains(const std::string& path) {
  const Table t = read_table(path);
  if (t.comments.empty() || t.comments[0] != kChainsSchema) {
    throw CliError(kExitData, "'" + path + "' is not a " + std::string(kChainsSchema) + " file");
  }
  if (t.columns != kChainColumns) throw CliError(kExitData, "'" + path + "': unexpected columns");
  Chains c;
  c.path = path;
  c.length = t.rows.size();
  for (std::size_t k = 0; k < t.columns.size(); ++k) {
    auto& col = c.columns[t.columns[k]];
    col.reserve(t.rows.size());
    for (const auto& r : t.rows) col.push_back(r[k]);
  }
  return c;
}

std::optional<double> ess_per_it(const std::vector<double>& x) {
  double e = 0.0;
  if (x.size() < 10 || sepcov_ess(x.data(), x.size(), &e) != SEPCOV_OK) return std::nullopt;
  return e / static_cast<double>(x.size());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string f;
  while (std::getline(ss, f, ',')) {
    if (!f.empty()) out.push_back(f);
  }
  return out;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& columns_arg,
                std::optional<double> threshold, const std::string& out_dir) {
  if (files.size() < 2) throw CliError(kExitConfig, "compare needs at least two chains files");
  std::vector<Chains> chains;
  for (const auto& f : files) chains.push_back(read_chains(f));
  const auto all = summary_columns();
  const std::vector<std::string> columns = columns_arg.empty() ? all : split_list(columns_arg);
  for (const auto& col : columns) {
    if (std::find(all.begin(), all.end(), col) == all.end()) {
      throw CliError(kExitConfig, "unknown column '" + col + "'");
    }
  }
  for (const auto& ch : chains) {
    if (ch.length == 0) throw CliError(kExitData, "'" + ch.path + "' has no samples");
  }

  bool pass = true;
  json ks = json::array();
  for (std::size_t i = 1; i < chains.size(); ++i) {
    json entry = {{"a", chains[0].path}, {"b", chains[i].path}};
    json stats = json::object();
    for (const auto& col : columns) {
      const auto& a = chains[0].columns.at(col);
      const auto& b = chains[i].columns.at(col);
      double d = 0.0;
      check(sepcov_ks(a.data(), a.size(), b.data(), b.size(), &d), "compare");
      stats[col] = d;
      if (threshold && !(d < *threshold)) pass = false;
    }
    entry["ks"] = stats;
    ks.push_back(entry);
  }
  json table = json::object();
  for (const auto& ch : chains) {
    json row = json::object();
    for (const auto& col : all) {
      const auto e = ess_per_it(ch.columns.at(col));
      row[col] = e ? json(*e) : json(nullptr);
    }
    table[ch.path] = row;
  }
  json report = {{"schema", "sepcov-compare v1"}, {"ks", ks}, {"ess_per_it", table}};
  if (threshold) {
    report["threshold"] = *threshold;
    report["pass"] = pass;
  }
  std::cout << report.dump(2) << "\n";
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_dump((fs::path(out_dir) / "compare.json").string(), report);
  }
  return pass ? kExitOk : kExitThreshold;
}

int cmd_diagnose(const std::string& file, std::size_t max_lag, const std::string& out_dir) {
  const Chains ch = read_chains(file);
  if (ch.length <= max_lag) {
    throw CliError(kExitData, "chain has " + std::to_string(ch.length) +
                                  " samples, need more than max_lag = " + std::to_string(max_lag));
  }
  const auto names = summary_columns();
  std::vector<std::vector<double>> acfs;
  json ess = json::object();
  for (const auto& name : names) {
    const auto& x = ch.columns.at(name);
    std::vector<double> r(max_lag + 1);
    check(sepcov_acf(x.data(), x.size(), max_lag, r.data()), "diagnose");
    acfs.push_back(std::move(r));
    double e = 0.0;
    if (x.size() >= 10 && sepcov_ess(x.data(), x.size(), &e) == SEPCOV_OK) {
      ess[name] = {{"ess", e}, {"ess_per_it", e / static_cast<double>(x.size())}};
    }
  }
  const std::string dir = out_dir.empty() ? fs::path(file).parent_path().string() : out_dir;
  if (!dir.empty()) ensure_dir(dir);
  const fs::path base = dir.empty() ? fs::path(".") : fs::path(dir);
  {
    auto out = open_out(base / "acf.csv");
    out << "# " << kAcfSchema << " source=" << file << "\n";
    out << "lag";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t k = 0; k <= max_lag; ++k) {
      out << k;
      for (const auto& a : acfs) out << ',' << format_double(a[k]);
      out << '\n';
    }
  }
  json dj = {{"schema", "sepcov-diagnostics v1"}, {"source", file}, {"n_samples", ch.length},
             {"max_lag", max_lag}, {"ess", ess}};
  write_dump((base / "diagnostics.json").string(), dj);
  std::cout << "wrote " << (base / "acf.csv").string() << " and "
            << (base / "diagnostics.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference for separable covariance matrices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sepcov_version()));

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out, "output directory");
  };

  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t n = 0;
  double gamma = 0.0;
  auto* gen = app.add_subcommand("generate", "simulate matrix-normal data from random factors");
  add_common(gen);
  gen->add_option("--d1", d1, "rows of Sigma1");
  gen->add_option("--d2", d2, "rows of Sigma2");
  gen->add_option("--n", n, "number of observations");
  gen->add_option("--gamma", gamma, "prior scale");

  std::string data_path;
  std::string sampler;
  std::string metric;
  double alpha = 0.0;
  double omega = 0.0;
  std::size_t n_adapt = 0;
  std::size_t n_burn = 0;
  std::size_t n_samples = 0;
  std::size_t thin = 0;
  bool dump_factors = false;
  auto* fit = app.add_subcommand("fit", "run a sampler and write the chains");
  add_common(fit);
  fit->add_option("--data", data_path, "observations CSV (default: generate from the config)");
  fit->add_option("--d1", d1, "rows of Sigma1");
  fit->add_option("--d2", d2, "rows of Sigma2");
  fit->add_option("--n", n, "observations to generate when --data is absent");
  fit->add_option("--gamma", gamma, "prior scale");
  fit->add_option("--sampler", sampler, "gibbs or sglmc")
      ->check(CLI::IsMember({"gibbs", "sglmc"}));
  fit->add_option("--metric", metric, "regularized, orthogonalized, weighted or product")
      ->check(CLI::IsMember({"regularized", "orthogonalized", "weighted", "product"}));
  fit->add_option("--alpha", alpha, "regularized cross-term weight");
  fit->add_option("--omega", omega, "weighted metric interpolation");
  fit->add_option("--n-adapt", n_adapt, "adaptation iterations");
  fit->add_option("--n-burn", n_burn, "burn-in iterations");
  fit->add_option("--n-samples", n_samples, "retained samples");
  fit->add_option("--thin", thin, "keep every thin-th iteration");
  fit->add_flag("--dump-factors", dump_factors, "also write vech(Sigma1), vech(Sigma2) per sample");

  std::vector<std::string> compare_files;
  std::string columns;
  double threshold = 0.0;
  auto* cmp = app.add_subcommand("compare", "KS statistics and ESS/it across chains files");
  add_common(cmp);
  cmp->add_option("chains", compare_files, "chains CSV files; the first is the reference")
      ->required()
      ->check(CLI::ExistingFile);
  auto* threshold_opt = cmp->add_option("--threshold", threshold, "fail (exit 4) if any KS >= this");
  cmp->add_option("--columns", columns, "comma-separated summary columns (default all)");

  std::string diag_file;
  std::size_t max_lag = 40;
  auto* diag = app.add_subcommand("diagnose", "write ACF and ESS for a chains file");
  add_common(diag);
  diag->add_option("chains", diag_file, "chains CSV")->required()->check(CLI::ExistingFile);
  diag->add_option("--max-lag", max_lag, "largest ACF lag")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig c = load_config(config_path);
    auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
    CLI::App* sub = app.get_subcommands().front();
    if (given(sub, "--seed")) c.seed = seed;
    if (given(sub, "--out")) c.output = out;
    if (sub == gen || sub == fit) {
      if (given(sub, "--d1")) {
        c.d1 = d1;
        c.dims_set = true;
      }
      if (given(sub, "--d2")) {
        c.d2 = d2;
        c.dims_set = true;
      }
      if (given(sub, "--n")) c.n = n;
      if (given(sub, "--gamma")) c.gamma = gamma;
    }
    if (sub == gen) return cmd_generate(c);
    if (sub == fit) {
      if (given(fit, "--data")) c.input = data_path;
      if (given(fit, "--sampler")) c.sampler = sampler;
      if (given(fit, "--metric")) c.metric = metric;
      if (given(fit, "--alpha")) c.alpha = alpha;
      if (given(fit, "--omega")) c.omega = omega;
      if (given(fit, "--n-adapt")) c.n_adapt = n_adapt;
      if (given(fit, "--n-burn")) c.n_burn = n_burn;
      if (given(fit, "--n-samples")) c.n_samples = n_samples;
      if (given(fit, "--thin")) c.thin = thin;
      if (dump_factors) c.dump_factors = true;
      return cmd_fit(c);
    }
    const std::string out_dir = given(sub, "--out") ? out : "";
    if (sub == cmp) {
      std::optional<double> th;
      if (threshold_opt->count() > 0) th = threshold;
      return cmd_compare(compare_files, columns, th, out_dir);
    }
    return cmd_diagnose(diag_file, max_lag, out_dir);
  } catch (const CliError& e) {
    std::cerr << "sepcov: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "sepcov: " << e.what() << "\n";
    return kExitData;
  }
}
