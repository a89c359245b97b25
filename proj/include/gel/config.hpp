#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gel/sim.hpp"

namespace gel {

// Resolved run configuration for the command-line front end. Values come
// from an optional key = value config file overridden by flags; the
// canonical serialization below round-trips through parse_config_text.
struct RunConfig {
  std::string command = "estimate";  // estimate | test | simulate
  std::string data_path;
  std::string model_spec;  // mean | logistic | var:S:M ('' = infer mean)
  std::string link = "el";
  std::string regime;      // i..v; empty when block_m/block_l are set
  int block_m = 0;         // 0 = unset
  int block_l = 0;
  double penalty_tau = 0.0;       // > 0 enables a fixed-tau penalized fit
  std::string penalty_grid;       // "auto" or comma list; enables selection
  std::vector<double> theta0;     // null value for the test command
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out = "gel_report";
  int workers = 0;  // 0 = hardware concurrency
  std::string design_path;
  std::string mode;  // test: wilks | overid (default: wilks iff theta0 given)
  double tol_outer = 1e-6;
  double tol_inner = 1e-9;
};

std::string canonical_config(const RunConfig& cfg);
RunConfig parse_config_text(const std::string& text, const std::string& origin);
RunConfig load_config_file(const std::string& path);

// Key = value Monte Carlo design file.
McDesign parse_design_text(const std::string& text, const std::string& origin);
McDesign load_design_file(const std::string& path);

// Model spec resolution against the data width; throws ConfigError on a
// dimension mismatch.
MomentModel resolve_model(const std::string& spec, long data_cols);

// Scheme from regime name or explicit (M, L).
BlockScheme resolve_scheme(const RunConfig& cfg, long n);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace gel
