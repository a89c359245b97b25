#include "gel/inner.hpp"

#include <cmath>
#include <limits>

#include "gel/errors.hpp"

namespace gel {

namespace {

double dual_objective(const Vector& v, const LinkFunction& link,
                      double eps_dom) {
  double acc = 0.0;
  for (Eigen::Index q = 0; q < v.size(); ++q) {
    if (!link.in_domain(v[q], eps_dom)) {
      return -std::numeric_limits<double>::infinity();
    }
    acc += link.rho(v[q]);
  }
  return acc / static_cast<double>(v.size());
}

}  // namespace

MultiplierState solve_lambda(const BlockMoments& moments,
                             const LinkFunction& link,
                             const InnerOptions& opts) {
  const int Q = moments.Q();
  const int r = moments.r();
  const double eps_dom = el_domain_floor(Q);
  const Matrix& phi = moments.phi;

  MultiplierState st;
  st.lambda = Vector::Zero(r);

  Vector v = Vector::Zero(Q);
  double obj = dual_objective(v, link, eps_dom);
  if (!std::isfinite(obj)) {
    throw NumericError("inner solver: objective non-finite at lambda = 0");
  }
  if (opts.trace) opts.trace->push_back(obj);

  // At an EL stationary point sum_q 1/(1 + v_q) equals Q exactly; a runaway
  // hull-failure pseudo-solution (gradient decaying like 1/|lambda|) fails
  // this identity by a wide margin.
  auto el_weight_sum_ok = [&]() {
    if (link.kind() != LinkKind::EL) return true;
    double s = 0.0;
    for (int q = 0; q < Q; ++q) s += 1.0 / (1.0 + v[q]);
    return std::fabs(s / static_cast<double>(Q) - 1.0) <= 1e-2;
  };

  Vector w(Q), grad(r);
  for (int it = 0; it < opts.max_iter; ++it) {
    for (int q = 0; q < Q; ++q) w[q] = link.rho_v(v[q]);
    grad = phi.transpose() * w / static_cast<double>(Q);
    st.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    st.iterations = it;
    if (st.gradient_norm < opts.tol) {
      st.objective = obj;
      st.boundary_hit = !el_weight_sum_ok();
      return st;
    }
    if (st.lambda.lpNorm<Eigen::Infinity>() > 1e10) {
      st.objective = obj;
      st.boundary_hit = true;
      return st;
    }

    // Newton system on the negated (convex) problem: (-H) d = grad with
    // H = Q^{-1} phi' diag(rho_vv) phi.
    Vector curv(Q);
    for (int q = 0; q < Q; ++q) curv[q] = -link.rho_vv(v[q]);
    Matrix negH = phi.transpose() * curv.asDiagonal() * phi /
                  static_cast<double>(Q);
    Vector dir = negH.ldlt().solve(grad);
    double resid = (negH * dir - grad).lpNorm<Eigen::Infinity>();
    if (!dir.allFinite() || resid > 1e-8 * (1.0 + grad.lpNorm<Eigen::Infinity>())) {
      // Ridge for rank-deficient omega (r close to Q).
      double ridge = 1e-10 * negH.trace() / static_cast<double>(r);
      negH.diagonal().array() += std::max(ridge, 1e-300);
      dir = negH.ldlt().solve(grad);
    }
    if (!dir.allFinite() || grad.dot(dir) <= 0.0) {
      dir = grad;  // gradient ascent fallback
    }

    Vector dv = phi * dir;

    // Largest feasible step for EL before the log blows up.
    double t = 1.0;
    if (link.kind() == LinkKind::EL) {
      double t_max = std::numeric_limits<double>::infinity();
      for (int q = 0; q < Q; ++q) {
        if (dv[q] < 0.0) {
          t_max = std::min(t_max, (v[q] + 1.0 - eps_dom) / (-dv[q]));
        }
      }
      if (t_max < 1.0) t = 0.99 * t_max;
    }

    bool accepted = false;
    for (int h = 0; h < opts.max_halvings && t > 0.0; ++h) {
      Vector v_new = v + t * dv;
      double obj_new = dual_objective(v_new, link, eps_dom);
      if (std::isfinite(obj_new) &&
          obj_new >= obj - 1e-14 * (1.0 + std::fabs(obj))) {
        st.lambda += t * dir;
        v = std::move(v_new);
        obj = obj_new;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (opts.trace && accepted) opts.trace->push_back(obj);
    if (!accepted) {
      st.objective = obj;
      st.boundary_hit = st.gradient_norm >= opts.tol || !el_weight_sum_ok();
      return st;
    }
  }

  // Iteration cap: report the best point; a large remaining gradient with an
  // EL link is indistinguishable from a hull failure.
  for (int q = 0; q < Q; ++q) w[q] = link.rho_v(v[q]);
  grad = phi.transpose() * w / static_cast<double>(Q);
  st.gradient_norm = grad.lpNorm<Eigen::Infinity>();
  st.iterations = opts.max_iter;
  st.objective = obj;
  st.boundary_hit = st.gradient_norm >= opts.tol || !el_weight_sum_ok();
  return st;
}

ImpliedProbabilities implied_probabilities(const MultiplierState& state,
                                           const BlockMoments& moments,
                                           const LinkFunction& link) {
  const int Q = moments.Q();
  Vector w(Q);
  for (int q = 0; q < Q; ++q) {
    w[q] = link.rho_v(moments.phi.row(q).dot(state.lambda));
  }
  double total = w.sum();
  if (total == 0.0 || !std::isfinite(total)) {
    throw NumericError("implied_probabilities: degenerate weight sum");
  }
  ImpliedProbabilities out;
  out.pi = w / total;
  out.interpretable = !state.boundary_hit;
  return out;
}

}  // namespace gel
