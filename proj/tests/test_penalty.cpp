#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "gel/errors.hpp"
#include "gel/penalty.hpp"
#include "gel/rng.hpp"
#include "gel/sim.hpp"

using namespace gel;

TEST_CASE("scad value and derivative closed forms") {
  ScadPenalty pen{1.0, 3.7};
  CHECK(pen.value(0.0) == 0.0);
  CHECK(pen.derivative(2.0) == doctest::Approx(1.7 / 2.7).epsilon(1e-12));
  CHECK(pen.derivative(0.5) == 1.0);          // flat tau region
  CHECK(pen.derivative(10.0) == 0.0);         // beyond a*tau
  CHECK(pen.value(10.0) ==
        doctest::Approx(0.5 * (3.7 + 1.0)).epsilon(1e-12));  // tau^2(a+1)/2
  CHECK_THROWS_AS(pen.value(-0.1), ConfigError);
}

TEST_CASE("scad derivative matches finite differences away from the knots") {
  ScadPenalty pen{0.4, 3.7};
  const double knot1 = pen.tau;
  const double knot2 = pen.a * pen.tau;
  int checked = 0;
  for (int i = 0; i < 140 && checked < 100; ++i) {
    double u = 0.02 + i * 0.03;
    if (std::fabs(u - knot1) < 1e-3 || std::fabs(u - knot2) < 1e-3) continue;
    ++checked;
    const double h = 1e-7;
    double fd = (pen.value(u + h) - pen.value(u - h)) / (2.0 * h);
    double d = pen.derivative(u);
    CHECK(std::fabs(fd - d) <= 1e-6 * std::max(1.0, std::fabs(d)));
  }
  CHECK(checked == 100);
}

TEST_CASE("scad derivative is continuous at both knots") {
  ScadPenalty pen{0.7, 3.7};
  const double eps = 1e-9;
  CHECK(std::fabs(pen.derivative(pen.tau - eps) -
                  pen.derivative(pen.tau + eps)) < 1e-8);
  CHECK(std::fabs(pen.derivative(pen.a * pen.tau - eps) -
                  pen.derivative(pen.a * pen.tau + eps)) < 1e-8);
  // value is continuous and non-decreasing on a grid
  double prev = 0.0;
  for (int i = 1; i <= 200; ++i) {
    double u = i * 0.02;
    double v = pen.value(u);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("vanishing tau reproduces the unpenalized estimate") {
  LogisticDgpConfig cfg;
  cfg.z = {0.1, 2, 300, 200, 31};
  Dataset data = gen_logistic(cfg);
  MomentModel model = model_logistic(2);
  BlockScheme scheme = make_scheme(300, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  OuterOptions tight;
  tight.tol = 1e-9;
  tight.inner.tol = 1e-12;
  EstimationResult plain = estimate(data, model, scheme, link, tight);
  REQUIRE(plain.converged);
  PenaltyOptions popts;
  popts.outer = tight;
  popts.prox_tol = 1e-9;
  PenalizedResult pen = estimate_penalized(data, model, scheme, link,
                                           ScadPenalty{1e-12, 3.7}, popts);
  CHECK((pen.theta_hat - plain.theta_hat).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("large tau zeroes the all-zero mean model exactly") {
  Dataset data = gen_var1({0.1, 3, 200, 200, 37});
  MomentModel model = model_mean(3);
  BlockScheme scheme = make_scheme(200, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  PenalizedResult pen =
      estimate_penalized(data, model, scheme, link, ScadPenalty{1.0, 3.7});
  CHECK(pen.theta_hat.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(pen.s_hat == 0);
  CHECK(pen.active_set.empty());

  // thresholding oracle: at this tau the penalized objective at zero beats
  // the one at the unpenalized estimate
  EstimationResult plain = estimate(data, model, scheme, link);
  double at_zero =
      profile_objective(data, model, scheme, link, Vector::Zero(3)).value;
  double at_plain = plain.profile_objective;
  ScadPenalty sp{1.0, 3.7};
  for (int j = 0; j < 3; ++j) {
    at_plain += sp.value(std::fabs(plain.theta_hat[j]));
  }
  CHECK(at_zero <= at_plain);
}

TEST_CASE("penalized objective dominates the unpenalized one") {
  Dataset data = gen_var1({0.1, 2, 150, 200, 41});
  MomentModel model = model_mean(2);
  BlockScheme scheme = make_scheme(150, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  PenalizedResult pen =
      estimate_penalized(data, model, scheme, link, ScadPenalty{0.05, 3.7});
  double unpen =
      profile_objective(data, model, scheme, link, pen.theta_hat).value;
  CHECK(pen.penalized_objective >= unpen - 1e-12);
}

TEST_CASE("returned estimate carries exact zeros and consistent objective") {
  LogisticDgpConfig cfg;
  cfg.z = {0.1, 4, 400, 200, 43};
  Dataset data = gen_logistic(cfg);
  MomentModel model = model_logistic(4);
  BlockScheme scheme = make_scheme(400, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  ScadPenalty sp{0.05, 3.7};
  PenalizedResult pen = estimate_penalized(data, model, scheme, link, sp);
  double value =
      profile_objective(data, model, scheme, link, pen.theta_hat).value;
  for (int j = 0; j < model.p; ++j) {
    value += sp.value(std::fabs(pen.theta_hat[j]));
  }
  CHECK(value == doctest::Approx(pen.penalized_objective).epsilon(1e-9));
  for (int j = 0; j < model.p; ++j) {
    bool active = std::find(pen.active_set.begin(), pen.active_set.end(), j) !=
                  pen.active_set.end();
    if (!active) CHECK(pen.theta_hat[j] == 0.0);
  }
}

TEST_CASE("tau path: sparsity is monotone and selection is deterministic") {
  LogisticDgpConfig cfg;
  cfg.z = {0.1, 4, 500, 200, 47};
  Dataset data = gen_logistic(cfg);
  MomentModel model = model_logistic(4);
  BlockScheme scheme = make_scheme(500, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  std::vector<double> grid = default_tau_grid(model.p, data.n(), scheme.M);
  CHECK(grid.size() == 10);
  PenalizedResult a = select_tau(data, model, scheme, link, grid);
  PenalizedResult b = select_tau(data, model, scheme, link, grid);
  CHECK(a.tau_selected == b.tau_selected);
  CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() == 0.0);
  REQUIRE(a.path.size() == grid.size());
  // s_hat non-increasing in tau along the path (sorted ascending)
  for (size_t i = 1; i < a.path.size(); ++i) {
    if (a.path[i].ok && a.path[i - 1].ok) {
      CHECK(a.path[i].s_hat <= a.path[i - 1].s_hat);
    }
  }
}

TEST_CASE("single-point grid returns that fit") {
  Dataset data = gen_var1({0.1, 2, 120, 200, 53});
  MomentModel model = model_mean(2);
  BlockScheme scheme = make_scheme(120, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  PenalizedResult fit = select_tau(data, model, scheme, link, {0.02});
  CHECK(fit.tau_selected == 0.02);
  CHECK(fit.path.size() == 1);
  CHECK_THROWS_AS(select_tau(data, model, scheme, link, {}), ConfigError);
}

TEST_CASE("penalized estimation rejects bad penalties") {
  Dataset data = gen_var1({0.1, 2, 100, 200, 59});
  MomentModel model = model_mean(2);
  BlockScheme scheme = make_scheme(100, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  CHECK_THROWS_AS(
      estimate_penalized(data, model, scheme, link, ScadPenalty{0.0, 3.7}),
      ConfigError);
  CHECK_THROWS_AS(
      estimate_penalized(data, model, scheme, link, ScadPenalty{0.1, 1.5}),
      ConfigError);
}

TEST_CASE("sparse logistic recovery on one replicate") {
  LogisticDgpConfig cfg;
  cfg.z = {0.1, 6, 2000, 200, 61};
  Dataset data = gen_logistic(cfg);
  MomentModel model = model_logistic(6);
  BlockScheme scheme = regime_scheme(Regime::IV, 2000);
  LinkFunction link = make_link(LinkKind::EL);
  PenalizedResult fit = select_tau(data, model, scheme, link,
                                   default_tau_grid(model.p, data.n(), scheme.M));
  // truth is (0.8, 0.2, 0, 0, 0, 0): the big coordinate must survive and
  // most noise coordinates must die
  REQUIRE(fit.s_hat >= 1);
  CHECK(std::find(fit.active_set.begin(), fit.active_set.end(), 0) !=
        fit.active_set.end());
  CHECK(fit.s_hat <= 4);
  CHECK(std::fabs(fit.theta_hat[0] - 0.8) < 0.25);
}
