#include "cli_common.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace sepcov_cli {

using nlohmann::json;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) { throw CliError(kExitConfig, what); }

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error("config: '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    config_error("config: '" + key + "' must be an integer");
  }
  const auto v = j.get<long long>();
  if (v < 0) config_error("config: '" + key + "' must be >= 0");
  return static_cast<std::size_t>(v);
}

void parse_prior(const json& j, PriorConfig& p, const std::string& key) {
  if (j.is_string()) {
    p.kind = j.get<std::string>();
    return;
  }
  if (!j.is_object()) config_error("config: '" + key + "' must be a string or object");
  for (const auto& [k, v] : j.items()) {
    if (k == "kind") {
      p.kind = get_as<std::string>(v, key + ".kind");
    } else if (k == "nu") {
      p.nu = get_as<double>(v, key + ".nu");
    } else if (k == "scale") {
      p.scale = get_as<double>(v, key + ".scale");
    } else if (k == "a") {
      p.a = get_as<double>(v, key + ".a");
    } else if (k == "c") {
      p.c = get_as<double>(v, key + ".c");
    } else {
      config_error("config: unknown key '" + key + "." + k + "'");
    }
  }
}

sepcov_prior_kind prior_kind(const std::string& kind) {
  if (kind == "iw") return SEPCOV_PRIOR_IW;
  if (kind == "siw") return SEPCOV_PRIOR_SIW;
  if (kind == "reference") return SEPCOV_PRIOR_REFERENCE;
  config_error("config: unknown prior '" + kind + "' (iw, siw, reference)");
}

sepcov_prior resolve_prior(const PriorConfig& p, std::size_t d, double gamma) {
  sepcov_prior out{};
  check(sepcov_prior_default(prior_kind(p.kind), d, gamma, &out), "prior");
  if (!std::isnan(p.nu)) out.nu = p.nu;
  if (!std::isnan(p.scale)) out.scale = p.scale;
  if (!std::isnan(p.a)) out.a = p.a;
  if (!std::isnan(p.c)) out.c = p.c;
  return out;
}

}  // namespace

PriorConfig::PriorConfig() : nu(kUnset), scale(kUnset), a(kUnset), c(kUnset) {}

void check(sepcov_status status, const char* context) {
  if (status == SEPCOV_OK) return;
  const int code = status == SEPCOV_ERR_INVALID_ARGUMENT || status == SEPCOV_ERR_NON_CONJUGATE_PRIOR
                       ? kExitConfig
                       : kExitData;
  throw CliError(code, std::string(context) + ": " + sepcov_last_error());
}

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) config_error("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    config_error("config: " + std::string(e.what()));
  }
  if (!j.is_object()) config_error("config: top level must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(get_count(v, k));
    } else if (k == "d1") {
      c.d1 = get_count(v, k);
      c.dims_set = true;
    } else if (k == "d2") {
      c.d2 = get_count(v, k);
      c.dims_set = true;
    } else if (k == "n") {
      c.n = get_count(v, k);
    } else if (k == "gamma") {
      c.gamma = get_as<double>(v, k);
    } else if (k == "sampler") {
      c.sampler = get_as<std::string>(v, k);
    } else if (k == "metric") {
      if (v.is_string()) {
        c.metric = v.get<std::string>();
      } else if (v.is_object()) {
        for (const auto& [mk, mv] : v.items()) {
          if (mk == "kind") {
            c.metric = get_as<std::string>(mv, "metric.kind");
          } else if (mk == "alpha") {
            c.alpha = get_as<double>(mv, "metric.alpha");
          } else if (mk == "omega") {
            c.omega = get_as<double>(mv, "metric.omega");
          } else if (mk == "slice") {
            c.slice = get_as<std::string>(mv, "metric.slice");
          } else {
            config_error("config: unknown key 'metric." + mk + "'");
          }
        }
      } else {
        config_error("config: 'metric' must be a string or object");
      }
    } else if (k == "prior1") {
      parse_prior(v, c.prior1, k);
    } else if (k == "prior2") {
      parse_prior(v, c.prior2, k);
    } else if (k == "n_adapt") {
      c.n_adapt = get_count(v, k);
    } else if (k == "n_burn") {
      c.n_burn = get_count(v, k);
    } else if (k == "n_samples") {
      c.n_samples = get_count(v, k);
    } else if (k == "thin") {
      c.thin = get_count(v, k);
    } else if (k == "leapfrog") {
      if (!v.is_object()) config_error("config: 'leapfrog' must be an object");
      for (const auto& [lk, lv] : v.items()) {
        if (lk == "kind") {
          c.leapfrog = get_as<std::string>(lv, "leapfrog.kind");
        } else if (lk == "L") {
          c.steps = get_count(lv, "leapfrog.L");
        } else if (lk == "L_max") {
          c.max_steps = get_count(lv, "leapfrog.L_max");
        } else {
          config_error("config: unknown key 'leapfrog." + lk + "'");
        }
      }
    } else if (k == "epsilon0") {
      c.epsilon0 = get_as<double>(v, k);
    } else if (k == "target_accept") {
      c.target_accept = get_as<double>(v, k);
    } else if (k == "tempering") {
      if (v.is_string() && v.get<std::string>() == "off") {
        c.tempering_chains = 0;
      } else if (v.is_object()) {
        c.tempering_chains = 5;
        for (const auto& [tk, tv] : v.items()) {
          if (tk == "chains") {
            c.tempering_chains = get_count(tv, "tempering.chains");
          } else if (tk == "c1") {
            c.tempering_c1 = get_as<double>(tv, "tempering.c1");
          } else {
            config_error("config: unknown key 'tempering." + tk + "'");
          }
        }
      } else {
        config_error("config: 'tempering' must be \"off\" or an object");
      }
    } else if (k == "input") {
      c.input = get_as<std::string>(v, k);
    } else if (k == "output") {
      c.output = get_as<std::string>(v, k);
    } else if (k == "dump_factors") {
      c.dump_factors = get_as<bool>(v, k);
    } else {
      config_error("config: unknown key '" + k + "'");
    }
  }
  return c;
}

void validate(const RunConfig& c) {
  if (c.d1 < 1 || c.d2 < 1) config_error("config: d1 and d2 must be >= 1");
  if (!(c.gamma > 0.0)) config_error("config: gamma must be > 0");
  if (c.sampler != "gibbs" && c.sampler != "sglmc") {
    config_error("config: sampler must be gibbs or sglmc");
  }
  if (c.metric != "regularized" && c.metric != "orthogonalized" && c.metric != "weighted" &&
      c.metric != "product") {
    config_error("config: metric must be regularized, orthogonalized, weighted or product");
  }
  if (!(c.alpha >= 0.0 && c.alpha < 1.0)) config_error("config: alpha must be in [0, 1)");
  if (!(c.omega > 0.0 && c.omega < 1.0)) config_error("config: omega must be in (0, 1)");
  if (c.slice != "quotient" && c.slice != "restricted") {
    config_error("config: metric.slice must be 'quotient' or 'restricted'");
  }
  if (!(c.target_accept > 0.0 && c.target_accept < 1.0)) {
    config_error("config: target_accept must be in (0, 1)");
  }
  if (!(c.epsilon0 > 0.0)) config_error("config: epsilon0 must be > 0");
  if (c.thin < 1) config_error("config: thin must be >= 1");
  if (c.leapfrog != "fixed" && c.leapfrog != "dynamic") {
    config_error("config: leapfrog.kind must be fixed or dynamic");
  }
  if (c.leapfrog == "fixed" && c.steps < 1) config_error("config: leapfrog.L must be >= 1");
  if (c.leapfrog == "dynamic" && (c.max_steps < 1 || c.max_steps > 1024)) {
    config_error("config: leapfrog.L_max must be in [1, 1024]");
  }
  if (c.tempering_chains == 1) config_error("config: tempering needs at least 2 chains");
  if (c.tempering_chains > 1) {
    if (!(c.tempering_c1 > 0.0 && c.tempering_c1 <= 1.0)) {
      config_error("config: tempering.c1 must be in (0, 1]");
    }
    if (c.sampler == "gibbs") config_error("config: tempering requires the sglmc sampler");
  }
  prior_kind(c.prior1.kind);
  prior_kind(c.prior2.kind);
  if (c.sampler == "gibbs" && (c.prior1.kind != "iw" || c.prior2.kind != "iw")) {
    config_error("config: the gibbs sampler needs iw priors on both factors");
  }
}

sepcov_run_config to_run_config(const RunConfig& c) {
  sepcov_run_config rc{};
  check(sepcov_run_config_default(c.d1, c.d2, c.gamma, &rc), "config");
  rc.sampler = c.sampler == "gibbs" ? SEPCOV_SAMPLER_GIBBS : SEPCOV_SAMPLER_SGLMC;
  if (c.metric == "regularized") {
    rc.metric = SEPCOV_METRIC_REGULARIZED;
  } else if (c.metric == "orthogonalized") {
    rc.metric = SEPCOV_METRIC_ORTHOGONALIZED;
  } else if (c.metric == "weighted") {
    rc.metric = SEPCOV_METRIC_WEIGHTED;
  } else {
    rc.metric = SEPCOV_METRIC_PRODUCT;
  }
  rc.alpha = c.alpha;
  rc.omega = c.omega;
  rc.restricted_slice = c.slice == "restricted" ? 1 : 0;
  rc.prior1 = resolve_prior(c.prior1, c.d1, c.gamma);
  rc.prior2 = resolve_prior(c.prior2, c.d2, c.gamma);
  rc.n_adapt = c.n_adapt;
  rc.n_burn = c.n_burn;
  rc.n_samples = c.n_samples;
  rc.thin = c.thin;
  rc.dynamic_steps = c.leapfrog == "dynamic" ? 1 : 0;
  rc.leapfrog_steps = c.leapfrog == "dynamic" ? c.max_steps : c.steps;
  rc.epsilon0 = c.epsilon0;
  rc.target_accept = c.target_accept;
  rc.seed = c.seed;
  rc.tempering_chains = c.tempering_chains;
  rc.tempering_c1 = c.tempering_c1;
  return rc;
}

std::string describe_metric(const RunConfig& c) {
  if (c.sampler == "gibbs") return "gibbs";
  if (c.metric == "regularized") return "regularized(alpha=" + format_double(c.alpha) + ")";
  const std::string tag = c.slice == "restricted" ? ",restricted" : "";
  if (c.metric == "weighted") return "weighted(omega=" + format_double(c.omega) + tag + ")";
  if (c.metric == "orthogonalized" && !tag.empty()) return "orthogonalized(restricted)";
  return c.metric;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitData, "cannot open '" + path + "'");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto start = line.find_first_not_of("# ");
      t.comments.push_back(start == std::string::npos ? "" : line.substr(start));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto& field : fields) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (t.columns.empty() && t.rows.empty()) {
        t.columns = fields;
        continue;
      }
      throw CliError(kExitData, path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    const std::size_t width = t.columns.empty() ? (t.rows.empty() ? row.size() : t.rows[0].size())
                                                : t.columns.size();
    if (row.size() != width) {
      throw CliError(kExitData, path + ":" + std::to_string(lineno) + ": expected " +
                                    std::to_string(width) + " fields, got " +
                                    std::to_string(row.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace sepcov_cli
