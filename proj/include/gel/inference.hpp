#pragma once

#include <map>

#include "gel/outer.hpp"

namespace gel {

struct CovarianceEstimates {
  Matrix V_M_hat;   // r x r, M * omega_hat(theta_hat)
  Matrix G_hat;     // r x p, grad phi_bar(theta_hat)
  Matrix sandwich;  // p x p asymptotic covariance of sqrt(n)(theta_hat - theta)
  Vector se;        // sqrt(diag(sandwich)/n)
  long n = 0;
  bool ridged = false;  // G'V^{-1}G was singular and stabilized
};

// Efficient sandwich (G' V_M^{-1} G)^{-1}. With full_sandwich the
// three-matrix form is computed instead, plugging in the single-full-span
// block estimate V_n_hat = n * g_bar g_bar'; that estimator is rank one and
// the mode is experimental.
CovarianceEstimates covariances(const Dataset& data, const MomentModel& model,
                                const BlockScheme& scheme,
                                const EstimationResult& result,
                                bool full_sandwich = false);

// GEL ratio w_n(theta) = (2 rho_vv(0)/rho_v(0)^2) {Q rho(0) - Q S_max}.
// Nonnegative up to round-off. A convex-hull failure at theta maps to +inf
// with *boundary set when provided.
double gel_ratio(const Dataset& data, const MomentModel& model,
                 const BlockScheme& scheme, const LinkFunction& link,
                 const Vector& theta, bool* boundary = nullptr,
                 const InnerOptions& inner_opts = {});

enum class ReferenceDist { StandardNormal, ChiSquare };

struct TestReport {
  double statistic = 0.0;  // standardized, compared against N(0,1) upper tail
  ReferenceDist reference = ReferenceDist::StandardNormal;
  int df = 0;
  double p_value = 1.0;  // one-sided upper normal (primary calibration)
  double w_n = 0.0;
  double p_chisq = 1.0;  // classical chi-square_df upper tail of w_n
  bool boundary = false;
  std::map<double, bool> reject_at;  // level -> p_value < level
};

// Statistic (2r)^{-1/2}(w_n(theta_0) - r) against the standard normal upper
// tail; the chi-square_r p-value of w_n is reported alongside for fixed-r use.
TestReport wilks_test(const Dataset& data, const MomentModel& model,
                      const BlockScheme& scheme, const LinkFunction& link,
                      const Vector& theta_0,
                      const InnerOptions& inner_opts = {});

// Over-identification: {2(r-p)}^{-1/2}(w_n(theta_hat) - (r-p)); requires
// r > p.
TestReport overid_test(const Dataset& data, const MomentModel& model,
                       const BlockScheme& scheme, const LinkFunction& link,
                       const EstimationResult& result,
                       const InnerOptions& inner_opts = {});

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Two-sided interval alpha_n'theta_hat +/- z_{1-alpha/2} sqrt(alpha_n'
// sandwich alpha_n / n) for a unit direction alpha_n.
Interval confidence_interval(const CovarianceEstimates& cov,
                             const EstimationResult& result,
                             const Vector& alpha_n, double alpha = 0.05);

}  // namespace gel
