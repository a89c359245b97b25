#pragma once

#include <string>
#include <vector>

#include "gel/outer.hpp"

namespace gel {

// Smoothly clipped absolute deviation penalty. The derivative is
//   p'_tau(u) = tau                  for 0 < u <= tau
//   p'_tau(u) = (a tau - u)_+/(a-1)  for u > tau
// and the value is its piecewise integral with p_tau(0) = 0, constant
// tau^2 (a+1)/2 beyond a*tau.
struct ScadPenalty {
  double tau = 0.1;
  double a = 3.7;

  double value(double u) const;
  double derivative(double u) const;
};

struct PenaltyOptions {
  OuterOptions outer;       // inner/outer tolerances; refits reuse these
  int max_lla_rounds = 10;  // local linear approximation rounds
  int max_prox_iter = 500;  // proximal-gradient iterations per round
  double prox_tol = 1e-7;   // on the prox-gradient residual, infinity norm
};

struct PathPoint {
  double tau = 0.0;
  Vector theta;            // final estimate at this tau (threshold + refit)
  double criterion = 0.0;  // w_n(theta_tau) + s_hat * log(n)
  int s_hat = 0;
  bool ok = true;
  std::string error;
};

struct PenalizedResult {
  Vector theta_hat;             // exact zeros off the active set
  std::vector<int> active_set;  // 0-based indices with theta_hat != 0
  int s_hat = 0;
  double tau_selected = 0.0;
  std::vector<PathPoint> path;
  EstimationResult base;  // fit details at the final estimate
  double penalized_objective = 0.0;
  bool s_gt_r_warning = false;  // active set larger than the moment count
};

// Penalized GEL at a fixed tau: minimize S_n(theta, lambda_hat(theta)) +
// sum_j p_tau(|theta_j|) by iteratively reweighted L1 (LLA), each round
// solved with proximal-gradient steps on the profile objective; coordinates
// below zero_tol = 1e-6*max(1, |theta|_inf) are set exactly to zero and the
// active set is refit. The refit is kept only if it does not increase the
// penalized objective.
PenalizedResult estimate_penalized(const Dataset& data,
                                   const MomentModel& model,
                                   const BlockScheme& scheme,
                                   const LinkFunction& link,
                                   const ScadPenalty& pen,
                                   const PenaltyOptions& opts = {});

// Fits the whole tau path (descending, warm-started) and selects the tau
// minimizing w_n(theta_tau) + s_hat(tau)*log(n).
PenalizedResult select_tau(const Dataset& data, const MomentModel& model,
                           const BlockScheme& scheme, const LinkFunction& link,
                           const std::vector<double>& grid, double a = 3.7,
                           const PenaltyOptions& opts = {});

// 10-point log-spaced grid spanning [0.04, 4]*M*sqrt(log(p)/n); log(p) is
// floored at log(2) so the grid stays positive for p = 1, and the block
// length M rescales for the blockwise objective's curvature.
std::vector<double> default_tau_grid(int p, long n, int block_m = 1);

// Restriction of a model to the given coordinates, the remaining ones pinned
// at zero. Used for active-set refits and their sandwich variances.
MomentModel restrict_model(const MomentModel& model,
                           const std::vector<int>& active);

}  // namespace gel
