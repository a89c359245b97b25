#include "gel/cli.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gel/errors.hpp"
#include "gel/io.hpp"
#include "gel/version.hpp"

namespace gel {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json vector_json(const Vector& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j;
  j["command"] = cfg.command;
  j["data"] = cfg.data_path;
  j["model"] = cfg.model_spec;
  j["link"] = cfg.link;
  j["regime"] = cfg.regime;
  j["block_m"] = cfg.block_m;
  j["block_l"] = cfg.block_l;
  j["penalty_tau"] = cfg.penalty_tau;
  j["penalty_grid"] = cfg.penalty_grid;
  j["theta0"] = cfg.theta0;
  j["alpha"] = cfg.alpha;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out;
  j["workers"] = cfg.workers;
  j["design"] = cfg.design_path;
  j["mode"] = cfg.mode;
  j["tol_outer"] = cfg.tol_outer;
  j["tol_inner"] = cfg.tol_inner;
  return j;
}

ordered_json test_report_json(const TestReport& rep) {
  ordered_json j;
  j["statistic"] = rep.statistic;
  j["reference"] = rep.reference == ReferenceDist::StandardNormal
                       ? "standard-normal"
                       : "chi-square";
  j["df"] = rep.df;
  j["p_value"] = rep.p_value;
  j["w_n"] = std::isinf(rep.w_n) ? ordered_json("inf") : ordered_json(rep.w_n);
  j["p_chisq"] = rep.p_chisq;
  j["boundary"] = rep.boundary;
  ordered_json rej;
  for (const auto& [level, reject] : rep.reject_at) {
    rej[format_double(level)] = reject;
  }
  j["reject_at"] = rej;
  return j;
}

OuterOptions outer_options(const RunConfig& cfg) {
  OuterOptions opts;
  opts.tol = cfg.tol_outer;
  opts.inner.tol = cfg.tol_inner;
  opts.seed = cfg.seed;
  if (!cfg.theta0.empty() && cfg.command == "estimate") {
    opts.theta_init =
        Eigen::Map<const Vector>(cfg.theta0.data(), cfg.theta0.size());
  }
  return opts;
}

std::string text_row(const std::string& label, double value) {
  std::ostringstream os;
  os << "  " << label;
  for (size_t i = label.size(); i < 24; ++i) os << ' ';
  os << format_double(value) << "\n";
  return os.str();
}

void write_reports(const RunConfig& cfg, const ordered_json& j,
                   const std::string& text) {
  atomic_write_file(cfg.out + ".json", j.dump(2) + "\n");
  atomic_write_file(cfg.out + ".txt", text);
}

}  // namespace

int cmd_estimate(const RunConfig& cfg) {
  if (cfg.data_path.empty()) {
    throw InputError("estimate: --data is required");
  }
  Dataset data = read_csv_dataset(cfg.data_path);
  MomentModel model = resolve_model(cfg.model_spec, data.d());
  BlockScheme scheme = resolve_scheme(cfg, data.n());
  LinkFunction link = make_link(parse_link_kind(cfg.link));
  OuterOptions opts = outer_options(cfg);

  const bool penalized = cfg.penalty_tau > 0.0 || !cfg.penalty_grid.empty();
  if (scheme.Q < model.r) {
    std::cerr << "warning: block count Q = " << scheme.Q
              << " is below the moment count r = " << model.r
              << "; omega_hat is rank deficient\n";
  }

  EstimationResult fit;
  PenalizedResult pfit;
  if (penalized) {
    PenaltyOptions popts;
    popts.outer = opts;
    popts.outer.theta_init.reset();
    if (!cfg.penalty_grid.empty() && cfg.penalty_grid != "auto" &&
        cfg.penalty_tau > 0.0) {
      throw ConfigError("give either --penalty-tau or --penalty-grid");
    }
    if (cfg.penalty_tau > 0.0) {
      pfit = estimate_penalized(data, model, scheme, link,
                                ScadPenalty{cfg.penalty_tau, 3.7}, popts);
    } else {
      std::vector<double> grid =
          cfg.penalty_grid == "auto" ? default_tau_grid(model.p, data.n(), scheme.M)
                                     : parse_double_list(cfg.penalty_grid);
      pfit = select_tau(data, model, scheme, link, grid, 3.7, popts);
    }
    fit = pfit.base;
    fit.theta_hat = pfit.theta_hat;
    if (pfit.s_gt_r_warning) {
      std::cerr << "warning: active set size " << pfit.s_hat
                << " exceeds the moment count r = " << model.r << "\n";
    }
  } else {
    fit = estimate(data, model, scheme, link, opts);
  }

  // Inference pieces. For penalized fits the sandwich applies to the
  // active-set refit; inactive coordinates report zero standard error.
  Vector se = Vector::Zero(model.p);
  std::vector<Interval> cis(model.p);
  bool overid_available = model.r > model.p && fit.converged;
  TestReport overid;
  double w_n_hat = std::numeric_limits<double>::quiet_NaN();
  {
    bool boundary = false;
    w_n_hat = gel_ratio(data, model, scheme, link, fit.theta_hat, &boundary,
                        opts.inner);
    if (penalized) {
      if (!pfit.active_set.empty()) {
        MomentModel sub = restrict_model(model, pfit.active_set);
        EstimationResult sub_fit = fit;
        Vector sub_theta(pfit.s_hat);
        for (int k = 0; k < pfit.s_hat; ++k) {
          sub_theta[k] = fit.theta_hat[pfit.active_set[k]];
        }
        sub_fit.theta_hat = sub_theta;
        CovarianceEstimates cov = covariances(data, sub, scheme, sub_fit);
        for (int k = 0; k < pfit.s_hat; ++k) {
          const int j = pfit.active_set[k];
          se[j] = cov.se[k];
          Vector dir = Vector::Zero(pfit.s_hat);
          dir[k] = 1.0;
          cis[j] = confidence_interval(cov, sub_fit, dir, cfg.alpha);
        }
      }
    } else {
      CovarianceEstimates cov = covariances(data, model, scheme, fit);
      se = cov.se;
      for (int j = 0; j < model.p; ++j) {
        Vector dir = Vector::Zero(model.p);
        dir[j] = 1.0;
        cis[j] = confidence_interval(cov, fit, dir, cfg.alpha);
      }
    }
    if (overid_available) {
      overid = overid_test(data, model, scheme, link, fit, opts.inner);
    }
  }

  ordered_json j;
  j["command"] = "estimate";
  j["version"] = kVersion;
  j["config"] = config_json(cfg);
  j["data"] = {{"n", data.n()}, {"d", data.d()}};
  j["model"] = {{"name", model.name}, {"r", model.r}, {"p", model.p}};
  j["scheme"] = {{"M", scheme.M}, {"L", scheme.L}, {"Q", scheme.Q}};
  j["link"] = link_kind_name(link.kind());
  ordered_json est;
  est["theta_hat"] = vector_json(fit.theta_hat);
  est["lambda_hat"] = vector_json(fit.lambda_hat);
  est["profile_objective"] = fit.profile_objective;
  est["converged"] = fit.converged;
  est["iterations"] = fit.iterations;
  est["gradient_norm"] = fit.gradient_norm;
  est["penalized"] = penalized;
  if (penalized) {
    est["tau_selected"] = pfit.tau_selected;
    est["active_set"] = pfit.active_set;  // 0-based indices
    est["s_hat"] = pfit.s_hat;
    ordered_json path = ordered_json::array();
    for (const PathPoint& pt : pfit.path) {
      path.push_back({{"tau", pt.tau},
                      {"s_hat", pt.s_hat},
                      {"criterion", pt.criterion},
                      {"ok", pt.ok}});
    }
    est["path"] = path;
  }
  j["estimate"] = est;
  ordered_json inf;
  inf["se"] = vector_json(se);
  ordered_json ci_arr = ordered_json::array();
  for (int k = 0; k < model.p; ++k) {
    ci_arr.push_back({{"coordinate", k + 1},
                      {"lower", cis[k].lower},
                      {"upper", cis[k].upper}});
  }
  inf["ci"] = ci_arr;
  inf["ci_alpha"] = cfg.alpha;
  inf["w_n_at_theta_hat"] =
      std::isinf(w_n_hat) ? ordered_json("inf") : ordered_json(w_n_hat);
  if (overid_available) {
    inf["overid"] = test_report_json(overid);
  } else {
    inf["overid"] = nullptr;
  }
  j["inference"] = inf;
  ordered_json diag;
  for (const auto& [key, value] : fit.diagnostics) diag[key] = value;
  j["diagnostics"] = diag;

  std::ostringstream text;
  text << "gelblock estimate (v" << kVersion << ")\n";
  text << "model " << model.name << "  r=" << model.r << " p=" << model.p
       << "  link " << link_kind_name(link.kind()) << "  blocks M="
       << scheme.M << " L=" << scheme.L << " Q=" << scheme.Q << "\n";
  text << "converged: " << (fit.converged ? "yes" : "NO") << "  iterations "
       << fit.iterations << "\n\n";
  text << "  coord  theta_hat              se                     ci_lower"
          "               ci_upper\n";
  for (int k = 0; k < model.p; ++k) {
    std::ostringstream row;
    row << "  " << k + 1;
    std::string srow = row.str();
    text << srow;
    for (size_t i = srow.size(); i < 9; ++i) text << ' ';
    std::string cells[4] = {format_double(fit.theta_hat[k]),
                            format_double(se[k]),
                            format_double(cis[k].lower),
                            format_double(cis[k].upper)};
    for (const std::string& c : cells) {
      text << c;
      for (size_t i = c.size(); i < 23; ++i) text << ' ';
    }
    text << "\n";
  }
  text << "\n";
  text << text_row("profile_objective", fit.profile_objective);
  text << text_row("w_n(theta_hat)", w_n_hat);
  if (overid_available) {
    text << text_row("overid_statistic", overid.statistic);
    text << text_row("overid_p_normal", overid.p_value);
    text << text_row("overid_p_chisq", overid.p_chisq);
  }
  if (penalized) {
    text << text_row("tau_selected", pfit.tau_selected);
    text << text_row("s_hat", pfit.s_hat);
  }
  write_reports(cfg, j, text.str());

  return fit.converged ? kExitOk : kExitNotConverged;
}

int cmd_test(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw InputError("test: --data is required");
  Dataset data = read_csv_dataset(cfg.data_path);
  MomentModel model = resolve_model(cfg.model_spec, data.d());
  BlockScheme scheme = resolve_scheme(cfg, data.n());
  LinkFunction link = make_link(parse_link_kind(cfg.link));
  OuterOptions opts = outer_options(cfg);

  std::string mode = cfg.mode;
  if (mode.empty()) mode = cfg.theta0.empty() ? "overid" : "wilks";

  TestReport rep;
  ordered_json extra;
  bool converged = true;
  if (mode == "wilks") {
    if (cfg.theta0.empty()) {
      throw InputError("test: wilks mode requires --theta0");
    }
    if (static_cast<int>(cfg.theta0.size()) != model.p) {
      throw ConfigError("test: theta0 has dimension " +
                        std::to_string(cfg.theta0.size()) + ", expected p = " +
                        std::to_string(model.p));
    }
    Vector theta0 =
        Eigen::Map<const Vector>(cfg.theta0.data(), cfg.theta0.size());
    rep = wilks_test(data, model, scheme, link, theta0, opts.inner);
    extra["theta0"] = cfg.theta0;
  } else if (mode == "overid") {
    if (model.r <= model.p) {
      throw ConfigError("over-identification requires r > p (got r = " +
                        std::to_string(model.r) + ", p = " +
                        std::to_string(model.p) + ")");
    }
    EstimationResult fit = estimate(data, model, scheme, link, opts);
    converged = fit.converged;
    rep = overid_test(data, model, scheme, link, fit, opts.inner);
    extra["theta_hat"] = vector_json(fit.theta_hat);
  } else {
    throw InputError("test: unknown mode '" + mode + "'");
  }

  ordered_json j;
  j["command"] = "test";
  j["version"] = kVersion;
  j["config"] = config_json(cfg);
  j["mode"] = mode;
  j["model"] = {{"name", model.name}, {"r", model.r}, {"p", model.p}};
  j["scheme"] = {{"M", scheme.M}, {"L", scheme.L}, {"Q", scheme.Q}};
  j["link"] = link_kind_name(link.kind());
  j["report"] = test_report_json(rep);
  for (auto& [key, value] : extra.items()) j[key] = value;

  std::ostringstream text;
  text << "gelblock test (" << mode << ", v" << kVersion << ")\n";
  text << text_row("statistic", rep.statistic);
  text << text_row("df", rep.df);
  text << text_row("p_normal", rep.p_value);
  text << text_row("w_n", rep.w_n);
  text << text_row("p_chisq", rep.p_chisq);
  write_reports(cfg, j, text.str());
  return converged ? kExitOk : kExitNotConverged;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.design_path.empty()) {
    throw InputError("simulate: --design is required");
  }
  McDesign design = load_design_file(cfg.design_path);
  if (cfg.seed != 0) design.base_seed = cfg.seed;
  if (cfg.workers != 0) design.workers = cfg.workers;
  DesignTable table = run_design(design);
  atomic_write_file(cfg.out + ".csv", design_table_csv(table));
  atomic_write_file(cfg.out + ".manifest.json", design_manifest_json(table));
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) {
  RunConfig cfg;
  try {
    // The config file provides defaults; flags override them.
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") {
        cfg = load_config_file(argv[i + 1]);
      }
    }

    CLI::App app{"blockwise generalized empirical likelihood toolkit"};
    app.require_subcommand(1);
    std::string config_path;

    auto add_common = [&](CLI::App* sub) {
      sub->add_option("--config", config_path, "key = value config file");
      sub->add_option("--data", cfg.data_path, "input CSV");
      sub->add_option("--model", cfg.model_spec,
                      "mean | logistic | var:S:M");
      sub->add_option("--link", cfg.link, "el | et | cu");
      sub->add_option("--regime", cfg.regime, "blocking regime i..v");
      sub->add_option("--block-m", cfg.block_m, "block length M");
      sub->add_option("--block-l", cfg.block_l, "block separation L");
      sub->add_option("--seed", cfg.seed, "RNG seed");
      sub->add_option("--out", cfg.out, "output path prefix");
      sub->add_option("--workers", cfg.workers, "worker threads (0 = auto)");
      sub->add_option("--alpha", cfg.alpha, "test / CI significance level");
      sub->add_option("--tol-outer", cfg.tol_outer, "outer gradient tolerance");
      sub->add_option("--tol-inner", cfg.tol_inner, "inner gradient tolerance");
    };

    std::string theta0_text;
    CLI::App* est = app.add_subcommand("estimate", "fit a GEL estimator");
    add_common(est);
    est->add_option("--penalty-tau", cfg.penalty_tau, "SCAD tau (fixed)");
    est->add_option("--penalty-grid", cfg.penalty_grid,
                    "'auto' or comma list of taus");
    est->add_option("--theta0", theta0_text, "starting point (comma list)");

    CLI::App* tst = app.add_subcommand("test", "GEL ratio / over-id tests");
    add_common(tst);
    tst->add_option("--theta0", theta0_text, "null parameter (comma list)");
    tst->add_option("--mode", cfg.mode, "wilks | overid");

    CLI::App* sim = app.add_subcommand("simulate", "run a Monte Carlo design");
    add_common(sim);
    sim->add_option("--design", cfg.design_path, "design file");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? kExitOk : kExitInputError;
    }
    if (!theta0_text.empty()) cfg.theta0 = parse_double_list(theta0_text);

    if (est->parsed()) cfg.command = "estimate";
    if (tst->parsed()) cfg.command = "test";
    if (sim->parsed()) cfg.command = "simulate";

    if (cfg.command == "estimate") return cmd_estimate(cfg);
    if (cfg.command == "test") return cmd_test(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    throw InputError("unknown command '" + cfg.command + "'");
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace gel
