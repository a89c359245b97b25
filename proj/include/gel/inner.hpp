#pragma once

#include <vector>

#include "gel/blocking.hpp"
#include "gel/link.hpp"

namespace gel {

struct InnerOptions {
  double tol = 1e-9;       // on the dual gradient infinity norm
  int max_iter = 200;
  int max_halvings = 60;
  // When set, the accepted dual objective is appended after every step.
  std::vector<double>* trace = nullptr;
};

// Solution state of the dual problem max_lambda Q^{-1} sum rho(lambda'phi_q).
struct MultiplierState {
  Vector lambda;
  double objective = 0.0;      // maximized S_n(theta, lambda_hat)
  double gradient_norm = 0.0;  // infinity norm of the dual gradient
  int iterations = 0;
  // EL convex-hull failure: the line search could not keep the domain
  // feasible while the gradient stayed large; lambda is the best feasible
  // point reached.
  bool boundary_hit = false;
};

// Damped Newton with backtracking line search on the concave dual; falls
// back to gradient ascent when round-off makes the Newton direction fail.
MultiplierState solve_lambda(const BlockMoments& moments,
                             const LinkFunction& link,
                             const InnerOptions& opts = {});

struct ImpliedProbabilities {
  Vector pi;            // Q weights, positive and summing to one for EL
  bool interpretable;   // false when derived from a boundary-hit state
};

// EL: pi_q proportional to 1/(1 + lambda'phi_q) (the blockwise EL weights).
// ET/CU: normalized rho_v(lambda'phi_q) weights (exponential tilting weights
// for ET); CU weights may be negative.
ImpliedProbabilities implied_probabilities(const MultiplierState& state,
                                           const BlockMoments& moments,
                                           const LinkFunction& link);

}  // namespace gel
