#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gel/inference.hpp"
#include "gel/penalty.hpp"

namespace gel {

// VAR(1) process X_t = psi X_{t-1} + eps_t with banded innovation covariance
// sigma_ii = 1 - psi^2, sigma_{i,i+-1} = 0.5(1 - psi^2); the stationary law
// has unit variances and 0.5 first-off-diagonal correlation.
struct Var1Config {
  double psi = 0.0;
  int p = 1;
  long n = 100;
  int burn_in = 200;
  std::uint64_t seed = 0;
};

Dataset gen_var1(const Var1Config& cfg);

// Bernoulli responses with P(Y=1|Z) = sigmoid(1 + Z'theta0), covariates from
// the VAR(1) above; rows are (Y, Z'). theta0 defaults to (0.8, 0.2, 0, ...).
struct LogisticDgpConfig {
  Var1Config z;
  Vector theta0;  // empty = default
};

Dataset gen_logistic(const LogisticDgpConfig& cfg);

// Two-step GMM comparator: first step with identity weight, second step
// weighted by the inverse blocked omega_hat from the first-step fit.
EstimationResult gmm_twostep(const Dataset& data, const MomentModel& model,
                             const BlockScheme& scheme,
                             const OuterOptions& opts = {});

enum class Estimator { EL, ET, CU, GMM, PEL, PET, PCU };

Estimator parse_estimator(const std::string& name);
std::string estimator_name(Estimator est);

struct McDesign {
  std::string model_kind = "mean";  // "mean" | "logistic"
  std::vector<Estimator> estimators{Estimator::EL};
  std::vector<Regime> regimes{Regime::I};
  std::vector<double> psis{0.1};
  std::vector<long> ns{500};
  double c_dim = 10.0;  // p = floor(c_dim * n^{2/15})
  int reps = 200;
  std::uint64_t base_seed = 0;
  int workers = 1;  // <= 0 means hardware concurrency
};

// p pegged to the sample size.
int pegged_dimension(double c_dim, long n);

struct DesignCell {
  Regime regime = Regime::I;
  Estimator est = Estimator::EL;
  long n = 0;
  double psi = 0.0;
  int p = 0;
  double median_sq_err = 0.0;  // median over reps of |theta_hat - theta0|_2^2
  int failures = 0;
  int reps = 0;
};

struct DesignTable {
  McDesign design;
  std::vector<DesignCell> cells;
};

// Runs the full design; replications are distributed over workers with one
// independent seeded generator per rep (base_seed + rep), so the table is
// identical for any worker count.
DesignTable run_design(const McDesign& design);

// Wide CSV mirroring the regime x estimator by n x psi layout, with
// failure-count columns appended.
std::string design_table_csv(const DesignTable& table);

// JSON run manifest: seed, RNG algorithm, versions, tolerances, cells.
std::string design_manifest_json(const DesignTable& table);

}  // namespace gel
