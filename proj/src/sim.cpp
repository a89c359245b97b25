#include "gel/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gel/errors.hpp"
#include "gel/rng.hpp"
#include "gel/version.hpp"

namespace gel {

namespace {

Matrix banded_innovation_cov(int p, double psi) {
  const double s = 1.0 - psi * psi;
  Matrix sigma = Matrix::Identity(p, p) * s;
  for (int i = 0; i + 1 < p; ++i) {
    sigma(i, i + 1) = 0.5 * s;
    sigma(i + 1, i) = 0.5 * s;
  }
  return sigma;
}

// VAR(1) path shared by both DGPs; rng is advanced coordinate by coordinate
// in time order so streams are pinned.
Matrix var1_path(const Var1Config& cfg, Rng& rng) {
  if (!(std::fabs(cfg.psi) < 1.0)) {
    throw ConfigError("gen_var1: need |psi| < 1");
  }
  if (cfg.p < 1 || cfg.n < 2) {
    throw ConfigError("gen_var1: need p >= 1 and n >= 2");
  }
  Matrix sigma = banded_innovation_cov(cfg.p, cfg.psi);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericError("gen_var1: innovation covariance not positive definite");
  }
  Matrix chol = llt.matrixL();

  Vector x = Vector::Zero(cfg.p);
  Vector z(cfg.p);
  Matrix out(cfg.n, cfg.p);
  const long total = cfg.burn_in + cfg.n;
  for (long t = 0; t < total; ++t) {
    for (int j = 0; j < cfg.p; ++j) z[j] = rng.normal();
    x = cfg.psi * x + chol * z;
    if (t >= cfg.burn_in) out.row(t - cfg.burn_in) = x.transpose();
  }
  return out;
}

}  // namespace

Dataset gen_var1(const Var1Config& cfg) {
  Rng rng(cfg.seed);
  return Dataset(var1_path(cfg, rng));
}

Dataset gen_logistic(const LogisticDgpConfig& cfg) {
  Rng rng(cfg.z.seed);
  Matrix z = var1_path(cfg.z, rng);
  Vector theta0 = cfg.theta0;
  if (theta0.size() == 0) {
    theta0 = Vector::Zero(cfg.z.p);
    theta0[0] = 0.8;
    if (cfg.z.p > 1) theta0[1] = 0.2;
  }
  if (theta0.size() != cfg.z.p) {
    throw ConfigError("gen_logistic: theta0 dimension mismatch");
  }
  Matrix out(cfg.z.n, cfg.z.p + 1);
  for (long t = 0; t < cfg.z.n; ++t) {
    const double prob = sigmoid(1.0 + z.row(t).dot(theta0));
    out(t, 0) = rng.bernoulli(prob) ? 1.0 : 0.0;
    out.row(t).tail(cfg.z.p) = z.row(t);
  }
  return Dataset(std::move(out));
}

namespace {

// Compact BFGS for the smooth GMM criteria.
struct QuadFit {
  Vector theta;
  double value = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

template <typename F>
QuadFit bfgs_minimize(F&& fg, Vector theta, double tol, int max_iter) {
  const int p = static_cast<int>(theta.size());
  Vector grad(p);
  double value = fg(theta, grad);
  Matrix hinv = Matrix::Identity(p, p);
  bool scaled = false;
  QuadFit fit;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() < tol) {
      fit.converged = true;
      break;
    }
    Vector dir = -(hinv * grad);
    if (!dir.allFinite() || dir.dot(grad) >= 0.0) {
      hinv = Matrix::Identity(p, p);
      scaled = false;
      dir = -grad;
    }
    double t = 1.0;
    bool accepted = false;
    Vector theta_new, grad_new(p);
    double value_new = 0.0;
    for (int h = 0; h < 60; ++h) {
      theta_new = theta + t * dir;
      value_new = fg(theta_new, grad_new);
      if (std::isfinite(value_new) &&
          value_new <= value + 1e-4 * t * grad.dot(dir) +
                           1e-15 * (1.0 + std::fabs(value))) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    Vector s = theta_new - theta;
    Vector y = grad_new - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = (sy / y.squaredNorm()) * Matrix::Identity(p, p);
        scaled = true;
      }
      Matrix vmat = Matrix::Identity(p, p) - (s * y.transpose()) / sy;
      hinv = vmat * hinv * vmat.transpose() + (s * s.transpose()) / sy;
    }
    theta = std::move(theta_new);
    grad = grad_new;
    value = value_new;
  }
  fit.theta = theta;
  fit.value = value;
  fit.grad_norm = grad.lpNorm<Eigen::Infinity>();
  fit.iterations = it;
  return fit;
}

}  // namespace

EstimationResult gmm_twostep(const Dataset& data, const MomentModel& model,
                             const BlockScheme& scheme,
                             const OuterOptions& opts) {
  Vector theta0;
  if (opts.theta_init) {
    theta0 = *opts.theta_init;
  } else if (model.default_init) {
    theta0 = model.default_init(data);
  } else {
    theta0 = Vector::Zero(model.p);
  }

  auto weighted_obj = [&](const Matrix& w) {
    return [&, w](const Vector& th, Vector& grad) -> double {
      BlockMoments bm = block_moments(data, model, scheme, th);
      Matrix gbar = block_jacobian(data, model, scheme, th);
      Vector wphi = w * bm.phi_bar;
      grad = 2.0 * (gbar.transpose() * wphi);
      return bm.phi_bar.dot(wphi);
    };
  };

  // Step 1: identity weight.
  QuadFit step1 = bfgs_minimize(weighted_obj(Matrix::Identity(model.r, model.r)),
                                theta0, opts.tol, opts.max_iter);

  // Step 2: inverse blocked omega_hat at the first-step fit.
  BlockMoments bm1 = block_moments(data, model, scheme, step1.theta);
  Matrix omega = bm1.omega_hat;
  Eigen::LDLT<Matrix> ldlt(omega);
  Matrix w2 = ldlt.solve(Matrix::Identity(model.r, model.r));
  if (!w2.allFinite() ||
      (omega * w2 - Matrix::Identity(model.r, model.r)).cwiseAbs().maxCoeff() >
          1e-6) {
    omega.diagonal().array() += 1e-10 * omega.trace() / model.r + 1e-300;
    w2 = omega.ldlt().solve(Matrix::Identity(model.r, model.r));
  }
  w2 = 0.5 * (w2 + w2.transpose()).eval();
  QuadFit step2 =
      bfgs_minimize(weighted_obj(w2), step1.theta, opts.tol, opts.max_iter);

  EstimationResult res;
  res.theta_hat = step2.theta;
  res.lambda_hat = Vector::Zero(model.r);
  res.profile_objective = step2.value;
  res.gradient_norm = step2.grad_norm;
  res.converged = step2.converged;
  res.iterations = step2.iterations;
  res.scheme = scheme;
  res.link_kind = LinkKind::CU;  // nearest GEL relative; objective is quadratic
  res.diagnostics["gmm_step1_objective"] = step1.value;
  res.diagnostics["gmm_step1_converged"] = step1.converged ? 1.0 : 0.0;
  return res;
}

Estimator parse_estimator(const std::string& name) {
  if (name == "el") return Estimator::EL;
  if (name == "et") return Estimator::ET;
  if (name == "cu") return Estimator::CU;
  if (name == "gmm") return Estimator::GMM;
  if (name == "pel") return Estimator::PEL;
  if (name == "pet") return Estimator::PET;
  if (name == "pcu") return Estimator::PCU;
  throw ConfigError("unknown estimator '" + name + "'");
}

std::string estimator_name(Estimator est) {
  switch (est) {
    case Estimator::EL: return "el";
    case Estimator::ET: return "et";
    case Estimator::CU: return "cu";
    case Estimator::GMM: return "gmm";
    case Estimator::PEL: return "pel";
    case Estimator::PET: return "pet";
    case Estimator::PCU: return "pcu";
  }
  return "?";
}

int pegged_dimension(double c_dim, long n) {
  return static_cast<int>(std::floor(
      c_dim * std::pow(static_cast<double>(n), 2.0 / 15.0)));
}

namespace {

bool is_penalized(Estimator est) {
  return est == Estimator::PEL || est == Estimator::PET ||
         est == Estimator::PCU;
}

LinkKind link_of(Estimator est) {
  switch (est) {
    case Estimator::EL:
    case Estimator::PEL:
      return LinkKind::EL;
    case Estimator::ET:
    case Estimator::PET:
      return LinkKind::ET;
    case Estimator::CU:
    case Estimator::PCU:
    case Estimator::GMM:
      return LinkKind::CU;
  }
  return LinkKind::EL;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

DesignTable run_design(const McDesign& design) {
  if (design.model_kind != "mean" && design.model_kind != "logistic") {
    throw ConfigError("run_design: model_kind must be 'mean' or 'logistic'");
  }
  if (design.reps < 1) throw ConfigError("run_design: reps must be positive");

  DesignTable table;
  table.design = design;

  int workers = design.workers;
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }

  for (long n : design.ns) {
    for (double psi : design.psis) {
      const int p = pegged_dimension(design.c_dim, n);
      if (p < 1) throw ConfigError("run_design: pegged dimension < 1");
      const bool mean_model = design.model_kind == "mean";
      Vector theta0;
      if (mean_model) {
        theta0 = Vector::Zero(p);
      } else {
        theta0 = Vector::Zero(p);
        theta0[0] = 0.8;
        if (p > 1) theta0[1] = 0.2;
      }
      const size_t n_cells = design.regimes.size() * design.estimators.size();

      // err[cell][rep]; NaN marks a failed replication.
      std::vector<std::vector<double>> err(
          n_cells, std::vector<double>(design.reps,
                                       std::numeric_limits<double>::quiet_NaN()));

      std::atomic<int> next_rep{0};
      auto worker_fn = [&]() {
        for (;;) {
          const int rep = next_rep.fetch_add(1);
          if (rep >= design.reps) return;
          const std::uint64_t seed =
              design.base_seed + static_cast<std::uint64_t>(rep);
          Dataset data = [&]() {
            if (mean_model) {
              return gen_var1({psi, p, n, 200, seed});
            }
            LogisticDgpConfig cfg;
            cfg.z = {psi, p, n, 200, seed};
            return gen_logistic(cfg);
          }();
          MomentModel model = mean_model ? model_mean(p) : model_logistic(p);

          size_t cell = 0;
          for (Regime regime : design.regimes) {
            BlockScheme scheme = regime_scheme(regime, n);
            for (Estimator est : design.estimators) {
              try {
                Vector theta_hat;
                bool ok = false;
                LinkFunction link = make_link(link_of(est));
                if (est == Estimator::GMM) {
                  EstimationResult r = gmm_twostep(data, model, scheme);
                  theta_hat = r.theta_hat;
                  ok = r.converged;
                } else if (is_penalized(est)) {
                  PenalizedResult r =
                      select_tau(data, model, scheme, link,
                                 default_tau_grid(model.p, n, scheme.M));
                  theta_hat = r.theta_hat;
                  ok = r.base.converged;
                } else {
                  EstimationResult r = estimate(data, model, scheme, link);
                  theta_hat = r.theta_hat;
                  ok = r.converged;
                }
                if (ok) {
                  err[cell][rep] = (theta_hat - theta0).squaredNorm();
                }
              } catch (const std::exception&) {
                // excluded from the median, counted below
              }
              ++cell;
            }
          }
        }
      };

      std::vector<std::thread> pool;
      const int spawn = std::min<int>(workers, design.reps);
      pool.reserve(spawn);
      for (int w = 0; w < spawn; ++w) pool.emplace_back(worker_fn);
      for (auto& th : pool) th.join();

      size_t cell = 0;
      for (Regime regime : design.regimes) {
        for (Estimator est : design.estimators) {
          DesignCell c;
          c.regime = regime;
          c.est = est;
          c.n = n;
          c.psi = psi;
          c.p = p;
          c.reps = design.reps;
          std::vector<double> good;
          good.reserve(design.reps);
          for (double e : err[cell]) {
            if (std::isnan(e)) {
              ++c.failures;
            } else {
              good.push_back(e);
            }
          }
          c.median_sq_err = median_of(std::move(good));
          table.cells.push_back(c);
          ++cell;
        }
      }
    }
  }
  return table;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string cell_suffix(long n, double psi) {
  std::ostringstream os;
  os << "n" << n << "_psi" << psi;
  return os.str();
}

const DesignCell* find_cell(const DesignTable& t, Regime regime, Estimator est,
                            long n, double psi) {
  for (const auto& c : t.cells) {
    if (c.regime == regime && c.est == est && c.n == n && c.psi == psi) {
      return &c;
    }
  }
  return nullptr;
}

}  // namespace

std::string design_table_csv(const DesignTable& table) {
  const McDesign& d = table.design;
  std::ostringstream os;
  os << "regime,estimator";
  for (long n : d.ns) {
    for (double psi : d.psis) os << ",med_" << cell_suffix(n, psi);
  }
  for (long n : d.ns) {
    for (double psi : d.psis) os << ",fail_" << cell_suffix(n, psi);
  }
  os << "\n";
  for (Regime regime : d.regimes) {
    for (Estimator est : d.estimators) {
      os << regime_name(regime) << "," << estimator_name(est);
      for (long n : d.ns) {
        for (double psi : d.psis) {
          const DesignCell* c = find_cell(table, regime, est, n, psi);
          os << "," << (c ? fmt17(c->median_sq_err) : "");
        }
      }
      for (long n : d.ns) {
        for (double psi : d.psis) {
          const DesignCell* c = find_cell(table, regime, est, n, psi);
          os << "," << (c ? std::to_string(c->failures) : "");
        }
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string design_manifest_json(const DesignTable& table) {
  const McDesign& d = table.design;
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["rng"] = kRngAlgorithm;
  j["base_seed"] = d.base_seed;
  j["model"] = d.model_kind;
  j["reps"] = d.reps;
  j["c_dim"] = d.c_dim;
  j["burn_in"] = 200;
  j["tolerances"] = {{"tol_outer", OuterOptions{}.tol},
                     {"tol_inner", InnerOptions{}.tol}};
  auto& est = j["estimators"] = nlohmann::ordered_json::array();
  for (Estimator e : d.estimators) est.push_back(estimator_name(e));
  auto& reg = j["regimes"] = nlohmann::ordered_json::array();
  for (Regime r : d.regimes) reg.push_back(regime_name(r));
  j["ns"] = d.ns;
  j["psis"] = d.psis;
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const DesignCell& c : table.cells) {
    cells.push_back({{"regime", regime_name(c.regime)},
                     {"estimator", estimator_name(c.est)},
                     {"n", c.n},
                     {"psi", c.psi},
                     {"p", c.p},
                     {"median_sq_err", c.median_sq_err},
                     {"failures", c.failures},
                     {"reps", c.reps}});
  }
  return j.dump(2) + "\n";
}

}  // namespace gel
