#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gel/inner.hpp"

namespace gel {

struct OuterOptions {
  double tol = 1e-6;   // on the envelope gradient infinity norm
  int max_iter = 500;
  int max_halvings = 60;
  InnerOptions inner;
  std::optional<Vector> theta_init;
  // Extra seeded-jitter starting points beyond the default one; the best
  // converged fit wins.
  int multi_start = 0;
  std::uint64_t seed = 0;
  std::vector<double>* trace = nullptr;  // accepted profile values
};

struct EstimationResult {
  Vector theta_hat;
  Vector lambda_hat;
  double profile_objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  BlockScheme scheme;
  LinkKind link_kind = LinkKind::EL;
  std::map<std::string, double> diagnostics;
};

// Profile value S_n(theta, lambda_hat(theta)) with its envelope gradient
// Q^{-1} sum rho_v(lambda'phi_q) (grad phi_q)' lambda. When the inner solve
// hits the domain boundary the value is replaced by the feasibility
// surrogate rho(0) + 1e3*|rho_vv(0)|*(1 + |phi_bar|^2) whose gradient pushes
// the iterate back toward moments that can be centered.
struct ProfilePoint {
  double value = 0.0;
  Vector gradient;
  MultiplierState inner;
  bool surrogate = false;
};

ProfilePoint profile_objective(const Dataset& data, const MomentModel& model,
                               const BlockScheme& scheme,
                               const LinkFunction& link, const Vector& theta,
                               const InnerOptions& inner_opts = {});

// GEL estimator: minimize the profile objective over theta by BFGS on the
// envelope gradient with backtracking line search; restarts with steepest
// descent on curvature breakdown.
EstimationResult estimate(const Dataset& data, const MomentModel& model,
                          const BlockScheme& scheme, const LinkFunction& link,
                          const OuterOptions& opts = {});

}  // namespace gel
