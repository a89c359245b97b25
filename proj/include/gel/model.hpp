#pragma once

#include <functional>
#include <optional>
#include <string>

#include "gel/dataset.hpp"

namespace gel {

// Box bounds on the parameter space, per coordinate.
struct ParameterBounds {
  Vector lower;
  Vector upper;
};

// Moment restriction map (x, theta) -> g(x, theta) in R^r, with an optional
// analytic jacobian d g_i / d theta_j. When the jacobian is absent a central
// finite-difference fallback with step 1e-6*max(1,|theta_j|) is used.
struct MomentModel {
  int r = 0;
  int p = 0;
  std::function<Vector(const Vector& x, const Vector& theta)> evaluate;
  std::function<Matrix(const Vector& x, const Vector& theta)> jacobian;
  std::optional<ParameterBounds> bounds;
  // Cheap consistent pilot used as the default starting point (sample mean
  // for the mean model, least squares for the VAR model). Zero vector when
  // absent.
  std::function<Vector(const Dataset& data)> default_init;
  std::string name = "custom";

  bool has_jacobian() const { return static_cast<bool>(jacobian); }
  // Analytic jacobian when present, otherwise the finite-difference fallback.
  Matrix jacobian_at(const Vector& x, const Vector& theta) const;
};

// Central finite differences of model.evaluate, step 1e-6*max(1,|theta_j|).
Matrix fd_jacobian(const MomentModel& model, const Vector& x,
                   const Vector& theta);

// g(x, theta) = x - theta; r = p = d; jacobian -I.
MomentModel model_mean(int d);

// Logistic conditional moment model. Rows are (Y, Z_1..Z_p); the residual is
// u(theta) = Y - sigmoid(1 + Z'theta) and the instruments are (Z', W')' with
// W_j = Z_j^2, so r = 2p.
MomentModel model_logistic(int p);

// VAR(m) residual moments for an s-dimensional series. Rows are the stacked
// (Y_t', Y_{t-1}', ..., Y_{t-m}')', theta vectorizes (A_1, ..., A_m)
// column-major, and g = residual (x) lag stack with the m lags as
// instruments: r = p = s^2 m (just identified).
MomentModel model_var_residual(int s, int m);

// Numerically stable logistic function.
double sigmoid(double x);

}  // namespace gel
