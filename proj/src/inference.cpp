#include "gel/inference.hpp"

#include <cmath>
#include <limits>

#include "gel/errors.hpp"
#include "gel/stats.hpp"

namespace gel {

namespace {

Matrix stabilized_inverse(const Matrix& a, bool* ridged) {
  Eigen::LDLT<Matrix> ldlt(a);
  Matrix inv = ldlt.solve(Matrix::Identity(a.rows(), a.cols()));
  double resid = (a * inv - Matrix::Identity(a.rows(), a.cols()))
                     .cwiseAbs()
                     .maxCoeff();
  if (!inv.allFinite() || resid > 1e-6) {
    Matrix ar = a;
    ar.diagonal().array() += 1e-10 * a.trace() / a.rows() + 1e-300;
    inv = ar.ldlt().solve(Matrix::Identity(a.rows(), a.cols()));
    if (ridged) *ridged = true;
  }
  return inv;
}

void fill_rejections(TestReport& rep) {
  for (double level : {0.10, 0.05, 0.01}) {
    rep.reject_at[level] = rep.p_value < level;
  }
}

}  // namespace

CovarianceEstimates covariances(const Dataset& data, const MomentModel& model,
                                const BlockScheme& scheme,
                                const EstimationResult& result,
                                bool full_sandwich) {
  CovarianceEstimates cov;
  cov.n = data.n();
  BlockMoments moments = block_moments(data, model, scheme, result.theta_hat);
  cov.V_M_hat = static_cast<double>(scheme.M) * moments.omega_hat;
  cov.V_M_hat = 0.5 * (cov.V_M_hat + cov.V_M_hat.transpose()).eval();
  cov.G_hat = block_jacobian(data, model, scheme, result.theta_hat);

  Matrix vinv_g = stabilized_inverse(cov.V_M_hat, &cov.ridged) * cov.G_hat;
  Matrix bread = cov.G_hat.transpose() * vinv_g;  // G' V^{-1} G
  bread = 0.5 * (bread + bread.transpose()).eval();
  Matrix bread_inv = stabilized_inverse(bread, &cov.ridged);

  if (!full_sandwich) {
    cov.sandwich = bread_inv;
  } else {
    // Experimental: V_n_hat from a single block spanning the whole sample.
    Vector gbar = sample_mean_g(data, model, result.theta_hat);
    Matrix vn = static_cast<double>(data.n()) * (gbar * gbar.transpose());
    Matrix meat = vinv_g.transpose() * vn * vinv_g;
    cov.sandwich = bread_inv * meat * bread_inv;
  }
  cov.sandwich = 0.5 * (cov.sandwich + cov.sandwich.transpose()).eval();
  cov.se = (cov.sandwich.diagonal() / static_cast<double>(data.n()))
               .cwiseMax(0.0)
               .cwiseSqrt();
  return cov;
}

double gel_ratio(const Dataset& data, const MomentModel& model,
                 const BlockScheme& scheme, const LinkFunction& link,
                 const Vector& theta, bool* boundary,
                 const InnerOptions& inner_opts) {
  BlockMoments moments = block_moments(data, model, scheme, theta);
  MultiplierState st = solve_lambda(moments, link, inner_opts);
  if (boundary) *boundary = st.boundary_hit;
  if (st.boundary_hit) {
    return std::numeric_limits<double>::infinity();
  }
  const double q = static_cast<double>(scheme.Q);
  return link.wilks_scale() * q * (link.rho0() - st.objective);
}

TestReport wilks_test(const Dataset& data, const MomentModel& model,
                      const BlockScheme& scheme, const LinkFunction& link,
                      const Vector& theta_0, const InnerOptions& inner_opts) {
  TestReport rep;
  rep.df = model.r;
  rep.w_n = gel_ratio(data, model, scheme, link, theta_0, &rep.boundary,
                      inner_opts);
  rep.statistic = (rep.w_n - rep.df) / std::sqrt(2.0 * rep.df);
  rep.p_value = stats::normal_sf(rep.statistic);
  rep.p_chisq = std::isinf(rep.w_n) ? 0.0 : stats::chisq_sf(rep.w_n, rep.df);
  fill_rejections(rep);
  return rep;
}

TestReport overid_test(const Dataset& data, const MomentModel& model,
                       const BlockScheme& scheme, const LinkFunction& link,
                       const EstimationResult& result,
                       const InnerOptions& inner_opts) {
  if (model.r <= model.p) {
    throw ConfigError("over-identification requires r > p (got r = " +
                      std::to_string(model.r) + ", p = " +
                      std::to_string(model.p) + ")");
  }
  TestReport rep;
  rep.df = model.r - model.p;
  rep.w_n = gel_ratio(data, model, scheme, link, result.theta_hat,
                      &rep.boundary, inner_opts);
  rep.statistic = (rep.w_n - rep.df) / std::sqrt(2.0 * rep.df);
  rep.p_value = stats::normal_sf(rep.statistic);
  rep.p_chisq = std::isinf(rep.w_n) ? 0.0 : stats::chisq_sf(rep.w_n, rep.df);
  fill_rejections(rep);
  return rep;
}

Interval confidence_interval(const CovarianceEstimates& cov,
                             const EstimationResult& result,
                             const Vector& alpha_n, double alpha) {
  if (std::fabs(alpha_n.norm() - 1.0) > 1e-8) {
    throw ConfigError("confidence_interval: direction must have unit L2 norm");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("confidence_interval: level must be in (0,1)");
  }
  const double center = alpha_n.dot(result.theta_hat);
  const double var =
      std::max(0.0, alpha_n.dot(cov.sandwich * alpha_n)) /
      static_cast<double>(cov.n);
  const double half = stats::normal_quantile(1.0 - 0.5 * alpha) * std::sqrt(var);
  return {center - half, center + half};
}

}  // namespace gel
