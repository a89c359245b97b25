#include "gel/config.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "gel/errors.hpp"
#include "gel/io.hpp"

namespace gel {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> parse_kv(const std::string& text,
                                            const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw InputError(origin + ": line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    }
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw InputError("field '" + key + "': not a number: '" + v + "'");
  }
}

long to_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw InputError("field '" + key + "': not an integer: '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& tok : split_list(text)) {
    out.push_back(to_double(tok, "list"));
  }
  return out;
}

std::string canonical_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "alpha = " << format_double(cfg.alpha) << "\n";
  os << "block_l = " << cfg.block_l << "\n";
  os << "block_m = " << cfg.block_m << "\n";
  os << "command = " << cfg.command << "\n";
  os << "data = " << cfg.data_path << "\n";
  os << "design = " << cfg.design_path << "\n";
  os << "link = " << cfg.link << "\n";
  os << "mode = " << cfg.mode << "\n";
  os << "model = " << cfg.model_spec << "\n";
  os << "out = " << cfg.out << "\n";
  os << "penalty_grid = " << cfg.penalty_grid << "\n";
  os << "penalty_tau = " << format_double(cfg.penalty_tau) << "\n";
  os << "regime = " << cfg.regime << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "theta0 = " << join_doubles(cfg.theta0) << "\n";
  os << "tol_inner = " << format_double(cfg.tol_inner) << "\n";
  os << "tol_outer = " << format_double(cfg.tol_outer) << "\n";
  os << "workers = " << cfg.workers << "\n";
  return os.str();
}

RunConfig parse_config_text(const std::string& text,
                            const std::string& origin) {
  RunConfig cfg;
  for (const auto& [key, value] : parse_kv(text, origin)) {
    if (key == "alpha") cfg.alpha = to_double(value, key);
    else if (key == "block_l") cfg.block_l = static_cast<int>(to_long(value, key));
    else if (key == "block_m") cfg.block_m = static_cast<int>(to_long(value, key));
    else if (key == "command") cfg.command = value;
    else if (key == "data") cfg.data_path = value;
    else if (key == "design") cfg.design_path = value;
    else if (key == "link") cfg.link = value;
    else if (key == "mode") cfg.mode = value;
    else if (key == "model") cfg.model_spec = value;
    else if (key == "out") cfg.out = value;
    else if (key == "penalty_grid") cfg.penalty_grid = value;
    else if (key == "penalty_tau") cfg.penalty_tau = to_double(value, key);
    else if (key == "regime") cfg.regime = value;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(value, key));
    else if (key == "theta0") cfg.theta0 = parse_double_list(value);
    else if (key == "tol_inner") cfg.tol_inner = to_double(value, key);
    else if (key == "tol_outer") cfg.tol_outer = to_double(value, key);
    else if (key == "workers") cfg.workers = static_cast<int>(to_long(value, key));
    else throw InputError(origin + ": unknown config key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

McDesign parse_design_text(const std::string& text,
                           const std::string& origin) {
  McDesign d;
  d.estimators.clear();
  d.regimes.clear();
  d.psis.clear();
  d.ns.clear();
  for (const auto& [key, value] : parse_kv(text, origin)) {
    if (key == "model") d.model_kind = value;
    else if (key == "estimators") {
      for (const auto& tok : split_list(value)) {
        d.estimators.push_back(parse_estimator(tok));
      }
    } else if (key == "regimes") {
      for (const auto& tok : split_list(value)) {
        d.regimes.push_back(parse_regime(tok));
      }
    } else if (key == "psis") {
      d.psis = parse_double_list(value);
    } else if (key == "ns") {
      for (const auto& tok : split_list(value)) {
        d.ns.push_back(to_long(tok, key));
      }
    } else if (key == "c_dim") {
      d.c_dim = to_double(value, key);
    } else if (key == "reps") {
      d.reps = static_cast<int>(to_long(value, key));
    } else if (key == "base_seed") {
      d.base_seed = static_cast<std::uint64_t>(to_long(value, key));
    } else if (key == "workers") {
      d.workers = static_cast<int>(to_long(value, key));
    } else {
      throw InputError(origin + ": unknown design key '" + key + "'");
    }
  }
  if (d.estimators.empty()) throw InputError(origin + ": field 'estimators' is required");
  if (d.regimes.empty()) throw InputError(origin + ": field 'regimes' is required");
  if (d.psis.empty()) throw InputError(origin + ": field 'psis' is required");
  if (d.ns.empty()) throw InputError(origin + ": field 'ns' is required");
  if (d.reps < 1) throw InputError(origin + ": field 'reps' must be >= 1");
  return d;
}

McDesign load_design_file(const std::string& path) {
  return parse_design_text(read_file(path), path);
}

MomentModel resolve_model(const std::string& spec, long data_cols) {
  const std::string kind = spec.empty() ? "mean" : spec;
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : kind) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  const std::string& name = parts[0];
  if (name == "mean") {
    return model_mean(static_cast<int>(data_cols));
  }
  if (name == "logistic") {
    if (data_cols < 2) {
      throw ConfigError("logistic model needs columns (Y, Z1..Zp); data has " +
                        std::to_string(data_cols));
    }
    return model_logistic(static_cast<int>(data_cols - 1));
  }
  if (name == "var") {
    if (parts.size() != 3) {
      throw ConfigError("var model spec must be var:S:M (series dim, lags)");
    }
    int s = static_cast<int>(to_long(parts[1], "model"));
    int m = static_cast<int>(to_long(parts[2], "model"));
    if (static_cast<long>(s) * (m + 1) != data_cols) {
      throw ConfigError("var:S:M expects data width s(m+1) = " +
                        std::to_string(static_cast<long>(s) * (m + 1)) +
                        ", data has " + std::to_string(data_cols));
    }
    return model_var_residual(s, m);
  }
  throw ConfigError("unknown model spec '" + spec + "'");
}

BlockScheme resolve_scheme(const RunConfig& cfg, long n) {
  if (!cfg.regime.empty()) {
    if (cfg.block_m > 0 || cfg.block_l > 0) {
      throw ConfigError("give either a regime or explicit block M/L, not both");
    }
    return regime_scheme(parse_regime(cfg.regime), n);
  }
  if (cfg.block_m > 0) {
    int l = cfg.block_l > 0 ? cfg.block_l : cfg.block_m;
    return make_scheme(n, cfg.block_m, l);
  }
  return regime_scheme(Regime::I, n);
}

}  // namespace gel
