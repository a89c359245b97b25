#include "gel/penalty.hpp"

#include <algorithm>
#include <cmath>

#include "gel/errors.hpp"

namespace gel {

double ScadPenalty::value(double u) const {
  if (u < 0.0) throw ConfigError("ScadPenalty::value: u must be nonnegative");
  if (u <= tau) return tau * u;
  if (u <= a * tau) {
    return tau * tau +
           (a * tau * (u - tau) - 0.5 * (u * u - tau * tau)) / (a - 1.0);
  }
  return 0.5 * tau * tau * (a + 1.0);
}

double ScadPenalty::derivative(double u) const {
  if (u < 0.0) {
    throw ConfigError("ScadPenalty::derivative: u must be nonnegative");
  }
  if (u <= tau) return tau;
  return std::max(a * tau - u, 0.0) / (a - 1.0);
}

namespace {

double penalty_sum(const ScadPenalty& pen, const Vector& theta) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    acc += pen.value(std::fabs(theta[j]));
  }
  return acc;
}

Vector soft_threshold(const Vector& u, const Vector& kappa) {
  Vector z(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    double mag = std::fabs(u[j]) - kappa[j];
    z[j] = mag > 0.0 ? (u[j] > 0.0 ? mag : -mag) : 0.0;
  }
  return z;
}

// One LLA round: minimize F(theta) + sum_j w_j |theta_j| by monotone
// proximal-gradient with a Barzilai-Borwein step and backtracking.
Vector prox_gradient_solve(const Dataset& data, const MomentModel& model,
                           const BlockScheme& scheme, const LinkFunction& link,
                           const Vector& weights, Vector theta,
                           const PenaltyOptions& opts, int* evals) {
  ProfilePoint cur =
      profile_objective(data, model, scheme, link, theta, opts.outer.inner);
  ++*evals;
  double t = 1.0;
  Vector theta_prev;
  Vector grad_prev;
  for (int it = 0; it < opts.max_prox_iter; ++it) {
    if (it > 0) {
      Vector s = theta - theta_prev;
      Vector y = cur.gradient - grad_prev;
      double sy = s.dot(y);
      if (sy > 1e-14 * s.norm() * y.norm()) {
        t = std::clamp(s.squaredNorm() / sy, 1e-12, 1e12);
      }
    }
    Vector z;
    ProfilePoint next;
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      z = soft_threshold(theta - t * cur.gradient, t * weights);
      Vector diff = z - theta;
      if (diff.lpNorm<Eigen::Infinity>() == 0.0) {
        accepted = false;
        break;
      }
      next = profile_objective(data, model, scheme, link, z, opts.outer.inner);
      ++*evals;
      double quad = cur.value + cur.gradient.dot(diff) +
                    diff.squaredNorm() / (2.0 * t) +
                    1e-15 * (1.0 + std::fabs(cur.value));
      if (std::isfinite(next.value) && next.value <= quad) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    double resid = (z - theta).lpNorm<Eigen::Infinity>() / t;
    theta_prev = theta;
    grad_prev = cur.gradient;
    theta = std::move(z);
    cur = std::move(next);
    if (resid < opts.prox_tol) break;
  }
  return theta;
}

}  // namespace

MomentModel restrict_model(const MomentModel& model,
                           const std::vector<int>& active) {
  MomentModel sub;
  sub.r = model.r;
  sub.p = static_cast<int>(active.size());
  sub.name = model.name + "/active";
  const int full_p = model.p;
  // Captured by value so the restriction outlives the original handle.
  auto expand = [active, full_p](const Vector& th) {
    Vector full = Vector::Zero(full_p);
    for (size_t k = 0; k < active.size(); ++k) full[active[k]] = th[k];
    return full;
  };
  sub.evaluate = [base = model, expand](const Vector& x,
                                        const Vector& th) -> Vector {
    return base.evaluate(x, expand(th));
  };
  sub.jacobian = [base = model, expand, active](const Vector& x,
                                                const Vector& th) -> Matrix {
    Matrix jac_full = base.jacobian_at(x, expand(th));
    Matrix jac(base.r, static_cast<int>(active.size()));
    for (size_t k = 0; k < active.size(); ++k) {
      jac.col(k) = jac_full.col(active[k]);
    }
    return jac;
  };
  if (model.bounds) {
    ParameterBounds b;
    b.lower.resize(active.size());
    b.upper.resize(active.size());
    for (size_t k = 0; k < active.size(); ++k) {
      b.lower[k] = model.bounds->lower[active[k]];
      b.upper[k] = model.bounds->upper[active[k]];
    }
    sub.bounds = b;
  }
  return sub;
}

PenalizedResult estimate_penalized(const Dataset& data,
                                   const MomentModel& model,
                                   const BlockScheme& scheme,
                                   const LinkFunction& link,
                                   const ScadPenalty& pen,
                                   const PenaltyOptions& opts) {
  if (!(pen.tau > 0.0)) {
    throw ConfigError("estimate_penalized: tau must be positive");
  }
  if (!(pen.a > 2.0)) {
    throw ConfigError("estimate_penalized: SCAD needs a > 2");
  }
  const int p = model.p;

  Vector theta;
  if (opts.outer.theta_init) {
    theta = *opts.outer.theta_init;
  } else if (model.default_init) {
    theta = model.default_init(data);
  } else {
    theta = Vector::Zero(p);
  }

  int evals = 0;
  for (int round = 0; round < opts.max_lla_rounds; ++round) {
    Vector weights(p);
    for (int j = 0; j < p; ++j) {
      weights[j] = pen.derivative(std::fabs(theta[j]));
    }
    Vector theta_next = prox_gradient_solve(data, model, scheme, link, weights,
                                            theta, opts, &evals);
    double change = (theta_next - theta).lpNorm<Eigen::Infinity>();
    theta = std::move(theta_next);
    if (change < 1e-8) break;
  }

  // Exact zeros, then refit the surviving coordinates.
  const double zero_tol =
      1e-6 * std::max(1.0, theta.lpNorm<Eigen::Infinity>());
  PenalizedResult out;
  out.tau_selected = pen.tau;
  Vector thresholded = theta;
  for (int j = 0; j < p; ++j) {
    if (std::fabs(thresholded[j]) < zero_tol) {
      thresholded[j] = 0.0;
    } else {
      out.active_set.push_back(j);
    }
  }
  out.s_hat = static_cast<int>(out.active_set.size());
  out.s_gt_r_warning = out.s_hat > model.r;

  auto full_result_at = [&](const Vector& th) -> EstimationResult {
    ProfilePoint pt =
        profile_objective(data, model, scheme, link, th, opts.outer.inner);
    EstimationResult res;
    res.theta_hat = th;
    res.lambda_hat = pt.inner.lambda;
    res.profile_objective = pt.value;
    res.gradient_norm = pt.gradient.lpNorm<Eigen::Infinity>();
    res.converged = !pt.surrogate;
    res.scheme = scheme;
    res.link_kind = link.kind();
    res.diagnostics["score_norm"] = pt.inner.gradient_norm;
    res.diagnostics["surrogate"] = pt.surrogate ? 1.0 : 0.0;
    return res;
  };

  EstimationResult thresholded_fit = full_result_at(thresholded);
  double thresholded_pen_obj =
      thresholded_fit.profile_objective + penalty_sum(pen, thresholded);

  Vector final_theta = thresholded;
  EstimationResult final_fit = thresholded_fit;
  double final_pen_obj = thresholded_pen_obj;

  if (!out.active_set.empty()) {
    MomentModel sub = restrict_model(model, out.active_set);
    OuterOptions refit_opts = opts.outer;
    Vector init(out.s_hat);
    for (int k = 0; k < out.s_hat; ++k) {
      init[k] = thresholded[out.active_set[k]];
    }
    refit_opts.theta_init = init;
    try {
      EstimationResult refit = estimate(data, sub, scheme, link, refit_opts);
      Vector refit_full = Vector::Zero(p);
      for (int k = 0; k < out.s_hat; ++k) {
        refit_full[out.active_set[k]] = refit.theta_hat[k];
      }
      EstimationResult refit_fit = full_result_at(refit_full);
      double refit_pen_obj =
          refit_fit.profile_objective + penalty_sum(pen, refit_full);
      if (refit_pen_obj <= thresholded_pen_obj) {
        final_theta = refit_full;
        final_fit = refit_fit;
        final_fit.converged = refit.converged;
        final_fit.iterations = refit.iterations;
        final_pen_obj = refit_pen_obj;
      }
    } catch (const EstimationError&) {
      // keep the thresholded fit
    }
  }

  out.theta_hat = final_theta;
  out.base = final_fit;
  out.base.diagnostics["penalized_evals"] = evals;
  out.penalized_objective = final_pen_obj;
  // Recompute the active set of the returned estimate (refit cannot revive
  // a zeroed coordinate but keeps indices stable).
  out.active_set.clear();
  for (int j = 0; j < p; ++j) {
    if (final_theta[j] != 0.0) out.active_set.push_back(j);
  }
  out.s_hat = static_cast<int>(out.active_set.size());
  return out;
}

PenalizedResult select_tau(const Dataset& data, const MomentModel& model,
                           const BlockScheme& scheme, const LinkFunction& link,
                           const std::vector<double>& grid, double a,
                           const PenaltyOptions& opts) {
  if (grid.empty()) {
    throw ConfigError("select_tau: tau grid must be non-empty");
  }
  std::vector<double> taus = grid;
  std::sort(taus.begin(), taus.end(), std::greater<double>());

  const double logn = std::log(static_cast<double>(data.n()));
  std::vector<PathPoint> path;
  PenalizedResult best;
  bool have_best = false;
  std::string failures;

  PenaltyOptions local = opts;
  std::optional<Vector> warm;
  double best_criterion = 0.0;
  for (double tau : taus) {
    PathPoint ppt;
    ppt.tau = tau;
    try {
      if (warm) local.outer.theta_init = warm;
      ScadPenalty pen{tau, a};
      PenalizedResult fit =
          estimate_penalized(data, model, scheme, link, pen, local);
      const double q = static_cast<double>(scheme.Q);
      const double w_n =
          link.wilks_scale() * q * (link.rho0() - fit.base.profile_objective);
      ppt.theta = fit.theta_hat;
      ppt.s_hat = fit.s_hat;
      ppt.criterion = w_n + fit.s_hat * logn;
      warm = fit.theta_hat;
      // Strictly smaller criterion wins; ties keep the earlier (larger,
      // sparser) tau.
      if (!have_best || ppt.criterion < best_criterion) {
        best = std::move(fit);
        best_criterion = ppt.criterion;
        have_best = true;
      }
    } catch (const std::exception& e) {
      ppt.ok = false;
      ppt.error = e.what();
      failures += "tau=" + std::to_string(tau) + ": " + e.what() + "; ";
    }
    path.push_back(std::move(ppt));
  }
  if (!have_best) {
    throw EstimationError("select_tau: every grid point failed: " + failures);
  }
  std::sort(path.begin(), path.end(),
            [](const PathPoint& x, const PathPoint& y) { return x.tau < y.tau; });
  best.path = std::move(path);
  return best;
}

std::vector<double> default_tau_grid(int p, long n, int block_m) {
  // The profile objective is an average over blocks of length M, which
  // scales its curvature (and so the tau needed to zero a coordinate) by M
  // relative to the per-observation likelihood; the grid follows suit.
  const double scale =
      static_cast<double>(std::max(block_m, 1)) *
      std::sqrt(std::log(std::max(static_cast<double>(p), 2.0)) /
                static_cast<double>(n));
  std::vector<double> grid(10);
  for (int i = 0; i < 10; ++i) {
    grid[i] = scale * std::pow(10.0, std::log10(0.04) +
                                         (std::log10(4.0) - std::log10(0.04)) *
                                             i / 9.0);
  }
  return grid;
}

}  // namespace gel
