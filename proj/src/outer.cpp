#include "gel/outer.hpp"

#include <cmath>
#include <limits>

#include "gel/errors.hpp"
#include "gel/rng.hpp"

namespace gel {

namespace {

constexpr double kSurrogateScale = 1e3;

Vector clamp_to_bounds(const MomentModel& model, Vector theta) {
  if (model.bounds) {
    theta = theta.cwiseMax(model.bounds->lower).cwiseMin(model.bounds->upper);
  }
  return theta;
}

// Envelope gradient Q^{-1} sum_q rho_v(v_q) (grad phi_q)' lambda. Row t
// enters every block containing it, so one pass over the per-row jacobians
// with weight sum_{q: t in B_q} rho_v(v_q) suffices.
Vector envelope_gradient(const Dataset& data, const MomentModel& model,
                         const BlockScheme& scheme, const LinkFunction& link,
                         const BlockMoments& moments, const Vector& theta,
                         const Vector& lambda) {
  const int Q = scheme.Q;
  Vector w(Q);
  for (int q = 0; q < Q; ++q) {
    w[q] = link.rho_v(moments.phi.row(q).dot(lambda));
  }
  const long used = scheme.covered_rows();
  Vector row_weight = Vector::Zero(used);
  for (int q = 0; q < Q; ++q) {
    const long start = scheme.block_start(q);
    for (int m = 0; m < scheme.M; ++m) row_weight[start + m] += w[q];
  }
  Vector acc = Vector::Zero(model.p);
  for (long t = 0; t < used; ++t) {
    if (row_weight[t] == 0.0) continue;
    acc.noalias() +=
        row_weight[t] * (model.jacobian_at(data.row(t), theta).transpose() * lambda);
  }
  return acc / (static_cast<double>(Q) * scheme.M);
}

struct FitOutcome {
  EstimationResult result;
  bool any_feasible = false;
};

}  // namespace

ProfilePoint profile_objective(const Dataset& data, const MomentModel& model,
                               const BlockScheme& scheme,
                               const LinkFunction& link, const Vector& theta,
                               const InnerOptions& inner_opts) {
  BlockMoments moments = block_moments(data, model, scheme, theta);
  ProfilePoint pt;
  pt.inner = solve_lambda(moments, link, inner_opts);
  if (pt.inner.boundary_hit) {
    // Convex-hull failure: push the outer iterate back toward moments that
    // can be centered at zero.
    const double pen = kSurrogateScale * std::fabs(link.rho_vv0());
    const double gap = moments.phi_bar.squaredNorm();
    pt.value = link.rho0() + pen * (1.0 + gap);
    Matrix gbar = block_jacobian(data, model, scheme, theta);
    pt.gradient = 2.0 * pen * (gbar.transpose() * moments.phi_bar);
    pt.surrogate = true;
    return pt;
  }
  pt.value = pt.inner.objective;
  pt.gradient = envelope_gradient(data, model, scheme, link, moments, theta,
                                  pt.inner.lambda);
  pt.surrogate = false;
  return pt;
}

namespace {

FitOutcome run_single_fit(const Dataset& data, const MomentModel& model,
                          const BlockScheme& scheme, const LinkFunction& link,
                          const Vector& theta0, const OuterOptions& opts,
                          std::map<std::string, double>& diag) {
  const int p = model.p;
  FitOutcome out;

  Vector theta = clamp_to_bounds(model, theta0);
  ProfilePoint cur =
      profile_objective(data, model, scheme, link, theta, opts.inner);
  diag["function_evals"] += 1;
  if (cur.surrogate) diag["boundary_hits"] += 1;

  // Best feasible iterate seen, in case the search ends on a surrogate.
  bool have_feasible = !cur.surrogate;
  Vector best_theta = theta;
  ProfilePoint best = cur;

  Matrix hinv = Matrix::Identity(p, p);
  bool hinv_scaled = false;
  int it = 0;
  bool converged = false;

  if (opts.trace) opts.trace->push_back(cur.value);

  // Gradient norm, switching to the projected-gradient residual when box
  // bounds can be active (the raw gradient need not vanish there).
  auto stationarity = [&](const Vector& th, const Vector& grad) {
    if (!model.bounds) return grad.lpNorm<Eigen::Infinity>();
    return (th - clamp_to_bounds(model, th - grad)).lpNorm<Eigen::Infinity>();
  };

  for (; it < opts.max_iter; ++it) {
    if (!cur.surrogate && stationarity(theta, cur.gradient) < opts.tol) {
      converged = true;
      break;
    }
    Vector dir = -(hinv * cur.gradient);
    if (!dir.allFinite() || dir.dot(cur.gradient) >= 0.0) {
      hinv = Matrix::Identity(p, p);
      hinv_scaled = false;
      dir = -cur.gradient;
    }

    double t = 1.0;
    bool accepted = false;
    Vector theta_new;
    ProfilePoint next;
    for (int h = 0; h < opts.max_halvings; ++h) {
      theta_new = clamp_to_bounds(model, theta + t * dir);
      double pred = cur.gradient.dot(theta_new - theta);
      next = profile_objective(data, model, scheme, link, theta_new,
                               opts.inner);
      diag["function_evals"] += 1;
      if (next.surrogate) diag["boundary_hits"] += 1;
      if (std::isfinite(next.value) &&
          next.value <= cur.value + 1e-4 * std::min(0.0, pred) +
                            1e-15 * (1.0 + std::fabs(cur.value))) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if ((dir + cur.gradient).lpNorm<Eigen::Infinity>() > 0.0) {
        // Quasi-Newton direction failed: restart with steepest descent.
        hinv = Matrix::Identity(p, p);
        hinv_scaled = false;
        continue;
      }
      break;  // no descent along the gradient either
    }

    Vector s = theta_new - theta;
    Vector y = next.gradient - cur.gradient;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!hinv_scaled) {
        hinv = (sy / y.squaredNorm()) * Matrix::Identity(p, p);
        hinv_scaled = true;
      }
      Matrix vmat = Matrix::Identity(p, p) - (s * y.transpose()) / sy;
      hinv = vmat * hinv * vmat.transpose() + (s * s.transpose()) / sy;
    }

    theta = std::move(theta_new);
    cur = std::move(next);
    if (opts.trace) opts.trace->push_back(cur.value);
    if (!cur.surrogate &&
        (!have_feasible || cur.value <= best.value)) {
      have_feasible = true;
      best_theta = theta;
      best = cur;
    }
  }

  // Land on the best feasible point when the last iterate was a surrogate.
  if (cur.surrogate && have_feasible) {
    theta = best_theta;
    cur = best;
    converged = false;
  }
  out.any_feasible = have_feasible || !cur.surrogate;

  EstimationResult& res = out.result;
  res.theta_hat = theta;
  res.lambda_hat = cur.inner.lambda;
  res.profile_objective = cur.value;
  res.gradient_norm =
      cur.gradient.size() ? stationarity(theta, cur.gradient) : 0.0;
  res.converged = converged && !cur.surrogate;
  res.iterations = it;
  res.scheme = scheme;
  res.link_kind = link.kind();
  res.diagnostics["score_norm"] = cur.inner.gradient_norm;
  res.diagnostics["inner_iterations"] = cur.inner.iterations;
  return out;
}

}  // namespace

EstimationResult estimate(const Dataset& data, const MomentModel& model,
                          const BlockScheme& scheme, const LinkFunction& link,
                          const OuterOptions& opts) {
  if (model.r < model.p) {
    throw ConfigError("estimate: r < p (under-identified model)");
  }
  Vector theta0;
  if (opts.theta_init) {
    if (opts.theta_init->size() != model.p) {
      throw ConfigError("estimate: theta_init has dimension " +
                        std::to_string(opts.theta_init->size()) +
                        ", expected p = " + std::to_string(model.p));
    }
    theta0 = *opts.theta_init;
  } else if (model.default_init) {
    theta0 = model.default_init(data);
  } else {
    theta0 = Vector::Zero(model.p);
  }

  std::map<std::string, double> diag;
  diag["function_evals"] = 0;
  diag["boundary_hits"] = 0;

  FitOutcome best = run_single_fit(data, model, scheme, link, theta0, opts, diag);
  for (int k = 0; k < opts.multi_start; ++k) {
    Rng rng(opts.seed + 1 + static_cast<std::uint64_t>(k));
    Vector jitter(model.p);
    for (int j = 0; j < model.p; ++j) {
      jitter[j] = theta0[j] + 0.5 * (1.0 + std::fabs(theta0[j])) * rng.normal();
    }
    FitOutcome alt = run_single_fit(data, model, scheme, link, jitter, opts, diag);
    const bool alt_better =
        (alt.result.converged && !best.result.converged) ||
        (alt.result.converged == best.result.converged &&
         alt.result.profile_objective < best.result.profile_objective);
    if (alt.any_feasible && (!best.any_feasible || alt_better)) {
      best = std::move(alt);
    }
  }

  if (!best.any_feasible) {
    throw EstimationError(
        "estimate: inner solver failed at every trial point (convex-hull "
        "failure throughout)");
  }

  EstimationResult res = best.result;
  // The max over lambda dominates the value at lambda = 0.
  if (res.profile_objective < link.rho0() - 1e-12) {
    throw NumericError("estimate: profile objective below rho(0)");
  }
  res.diagnostics.insert(diag.begin(), diag.end());
  res.diagnostics["q_lt_r"] = scheme.Q < model.r ? 1.0 : 0.0;
  Vector gbar = sample_mean_g(data, model, res.theta_hat);
  BlockMoments bm = block_moments(data, model, scheme, res.theta_hat);
  res.diagnostics["phi_bar_gap_inf"] =
      (bm.phi_bar - gbar).lpNorm<Eigen::Infinity>();

  // Key-expansion identity at the solution: the rho_v-weighted jacobian
  // composed with the inverse rho_vv-weighted second moment annihilates
  // phi_bar (up to the mean-value remainder in the curvature argument).
  {
    const int Q = scheme.Q;
    Vector v = bm.phi * res.lambda_hat;
    Vector wv(Q), cv(Q);
    for (int q = 0; q < Q; ++q) {
      wv[q] = link.rho_v(v[q]);
      cv[q] = link.rho_vv(v[q]);
    }
    Matrix curved =
        bm.phi.transpose() * cv.asDiagonal() * bm.phi / static_cast<double>(Q);
    Vector row_weight = Vector::Zero(scheme.covered_rows());
    for (int q = 0; q < Q; ++q) {
      const long start = scheme.block_start(q);
      for (int m = 0; m < scheme.M; ++m) row_weight[start + m] += wv[q];
    }
    Matrix weighted_jac = Matrix::Zero(model.r, model.p);
    for (long t = 0; t < scheme.covered_rows(); ++t) {
      if (row_weight[t] == 0.0) continue;
      weighted_jac.noalias() +=
          row_weight[t] * model.jacobian_at(data.row(t), res.theta_hat);
    }
    weighted_jac /= static_cast<double>(Q) * scheme.M;
    Vector key = weighted_jac.transpose() *
                 curved.fullPivLu().solve(bm.phi_bar);
    res.diagnostics["key_identity_residual"] =
        key.allFinite() ? key.lpNorm<Eigen::Infinity>() : -1.0;
  }
  return res;
}

}  // namespace gel
