#pragma once

namespace gel::stats {

// Regularized lower/upper incomplete gamma P(a,x), Q(a,x) = 1 - P(a,x).
// Series expansion for x < a+1, Lentz continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Standard normal distribution.
double normal_cdf(double z);
double normal_sf(double z);
double normal_quantile(double p);

// Chi-square with df degrees of freedom.
double chisq_cdf(double x, double df);
double chisq_sf(double x, double df);
double chisq_quantile(double p, double df);

}  // namespace gel::stats
