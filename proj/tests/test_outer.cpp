#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <vector>

#include "gel/errors.hpp"
#include "gel/inference.hpp"
#include "gel/outer.hpp"
#include "gel/rng.hpp"

using namespace gel;

namespace {

Dataset iid_normal(long n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return Dataset(std::move(m));
}

// (Y, Z1..Zp) rows with P(Y=1|Z) = sigmoid(1 + Z'theta0), iid gaussian Z.
Dataset iid_logistic(long n, const Vector& theta0, std::uint64_t seed) {
  Rng rng(seed);
  const int p = static_cast<int>(theta0.size());
  Matrix m(n, p + 1);
  for (long i = 0; i < n; ++i) {
    double lin = 1.0;
    for (int j = 0; j < p; ++j) {
      m(i, j + 1) = rng.normal();
      lin += m(i, j + 1) * theta0[j];
    }
    m(i, 0) = rng.bernoulli(sigmoid(lin)) ? 1.0 : 0.0;
  }
  return Dataset(std::move(m));
}

// Blocked sample mean: phi_bar(0) for the mean model.
Vector blocked_mean(const Dataset& data, const BlockScheme& scheme) {
  MomentModel m = model_mean(static_cast<int>(data.d()));
  return block_moments(data, m, scheme, Vector::Zero(data.d())).phi_bar;
}

// g = (X - theta, X^2 - theta^2 - 1): over-identified when the data are
// standard normal.
MomentModel toy_overid_model() {
  MomentModel m;
  m.r = 2;
  m.p = 1;
  m.name = "toy";
  m.evaluate = [](const Vector& x, const Vector& th) -> Vector {
    Vector g(2);
    g[0] = x[0] - th[0];
    g[1] = x[0] * x[0] - th[0] * th[0] - 1.0;
    return g;
  };
  m.jacobian = [](const Vector&, const Vector& th) -> Matrix {
    Matrix j(2, 1);
    j(0, 0) = -1.0;
    j(1, 0) = -2.0 * th[0];
    return j;
  };
  return m;
}

}  // namespace

TEST_CASE("just-identified mean model is solved exactly") {
  Dataset data = iid_normal(120, 3, 101);
  MomentModel model = model_mean(3);
  OuterOptions opts;
  opts.tol = 1e-10;
  opts.inner.tol = 1e-12;
  for (LinkKind kind : {LinkKind::EL, LinkKind::ET, LinkKind::CU}) {
    for (Regime regime : {Regime::I, Regime::II, Regime::IV}) {
      BlockScheme scheme = regime_scheme(regime, data.n());
      LinkFunction link = make_link(kind);
      EstimationResult res = estimate(data, model, scheme, link, opts);
      CHECK(res.converged);
      Vector target = blocked_mean(data, scheme);
      CHECK((res.theta_hat - target).lpNorm<Eigen::Infinity>() < 1e-8);
      CHECK(res.lambda_hat.lpNorm<Eigen::Infinity>() < 1e-8);
      CHECK(std::fabs(res.profile_objective - link.rho0()) < 1e-10);
    }
  }
}

TEST_CASE("profile objective at the sample mean") {
  Dataset data = iid_normal(80, 2, 103);
  MomentModel model = model_mean(2);
  BlockScheme scheme = make_scheme(80, 1, 1);
  Vector mean = data.values().colwise().mean().transpose();
  for (LinkKind kind : {LinkKind::EL, LinkKind::ET, LinkKind::CU}) {
    LinkFunction link = make_link(kind);
    ProfilePoint pt = profile_objective(data, model, scheme, link, mean);
    CHECK(std::fabs(pt.value - link.rho0()) < 1e-12);
    CHECK(pt.gradient.lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("CU profile value equals the quadratic closed form") {
  Vector theta0(2);
  theta0 << 0.5, -0.3;
  Dataset data = iid_logistic(150, theta0, 107);
  MomentModel model = model_logistic(2);
  BlockScheme scheme = make_scheme(150, 3, 1);
  LinkFunction cu = make_link(LinkKind::CU);
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    Vector th(2);
    th << 0.5 + 0.3 * rng.normal(), -0.3 + 0.3 * rng.normal();
    ProfilePoint pt = profile_objective(data, model, scheme, cu, th);
    BlockMoments bm = block_moments(data, model, scheme, th);
    double closed =
        0.5 * bm.phi_bar.dot(bm.omega_hat.fullPivLu().solve(bm.phi_bar));
    CHECK(std::fabs(pt.value - closed) < 1e-10);
  }
}

TEST_CASE("envelope gradient matches finite differences of the profile") {
  Vector theta0(2);
  theta0 << 0.4, -0.2;
  Dataset data = iid_logistic(200, theta0, 109);
  MomentModel model = model_logistic(2);
  BlockScheme scheme = make_scheme(200, 3, 1);
  InnerOptions tight;
  tight.tol = 1e-12;
  for (LinkKind kind : {LinkKind::EL, LinkKind::ET, LinkKind::CU}) {
    LinkFunction link = make_link(kind);
    OuterOptions opts;
    opts.inner = tight;
    EstimationResult fit = estimate(data, model, scheme, link, opts);
    REQUIRE(fit.converged);
    Rng rng(17);
    int checked = 0;
    while (checked < 20) {
      Vector th = fit.theta_hat;
      for (int j = 0; j < 2; ++j) th[j] += 0.15 * rng.normal();
      ProfilePoint pt = profile_objective(data, model, scheme, link, th, tight);
      if (pt.surrogate) continue;
      ++checked;
      for (int j = 0; j < 2; ++j) {
        const double h = 1e-5 * std::max(1.0, std::fabs(th[j]));
        Vector tp = th, tm = th;
        tp[j] += h;
        tm[j] -= h;
        double fp = profile_objective(data, model, scheme, link, tp, tight).value;
        double fm = profile_objective(data, model, scheme, link, tm, tight).value;
        double fd = (fp - fm) / (2.0 * h);
        CHECK(std::fabs(fd - pt.gradient[j]) <=
              1e-5 * std::max(1.0, std::fabs(fd)));
      }
    }
  }
}

TEST_CASE("CU estimate matches an independent CU-GMM minimizer") {
  Vector theta0(2);
  theta0 << 0.6, -0.4;
  Dataset data = iid_logistic(200, theta0, 113);
  MomentModel model = model_logistic(2);
  BlockScheme scheme = make_scheme(200, 1, 1);
  OuterOptions opts;
  opts.tol = 1e-9;
  opts.inner.tol = 1e-12;
  EstimationResult fit =
      estimate(data, model, scheme, make_link(LinkKind::CU), opts);
  REQUIRE(fit.converged);

  // Independent route: continuous-updating objective assembled directly and
  // minimized by damped Newton with finite differences.
  auto cu_obj = [&](const Vector& th) {
    Vector phibar = Vector::Zero(model.r);
    Matrix omega = Matrix::Zero(model.r, model.r);
    for (long t = 0; t < data.n(); ++t) {
      Vector g = model.evaluate(data.row(t), th);
      phibar += g;
      omega += g * g.transpose();
    }
    phibar /= static_cast<double>(data.n());
    omega /= static_cast<double>(data.n());
    return 0.5 * phibar.dot(omega.fullPivLu().solve(phibar));
  };
  Vector th = Vector::Zero(2);
  for (int it = 0; it < 80; ++it) {
    const double h = 1e-5;
    Vector grad(2);
    Matrix hess(2, 2);
    for (int j = 0; j < 2; ++j) {
      Vector tp = th, tm = th;
      tp[j] += h;
      tm[j] -= h;
      grad[j] = (cu_obj(tp) - cu_obj(tm)) / (2.0 * h);
    }
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k <= j; ++k) {
        Vector tpp = th, tpm = th, tmp = th, tmm = th;
        tpp[j] += h; tpp[k] += h;
        tpm[j] += h; tpm[k] -= h;
        tmp[j] -= h; tmp[k] += h;
        tmm[j] -= h; tmm[k] -= h;
        hess(j, k) = hess(k, j) =
            (cu_obj(tpp) - cu_obj(tpm) - cu_obj(tmp) + cu_obj(tmm)) /
            (4.0 * h * h);
      }
    }
    Vector step = hess.fullPivLu().solve(grad);
    if (!step.allFinite()) break;
    double f0 = cu_obj(th);
    double t = 1.0;
    while (t > 1e-8 && cu_obj(th - t * step) > f0) t *= 0.5;
    th -= t * step;
    if (step.lpNorm<Eigen::Infinity>() * t < 1e-10) break;
  }
  CHECK((fit.theta_hat - th).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("profile objective decreases over accepted outer steps") {
  Vector theta0(2);
  theta0 << 0.4, 0.0;
  Dataset data = iid_logistic(150, theta0, 127);
  MomentModel model = model_logistic(2);
  BlockScheme scheme = make_scheme(150, 2, 1);
  std::vector<double> trace;
  OuterOptions opts;
  opts.trace = &trace;
  EstimationResult fit =
      estimate(data, model, scheme, make_link(LinkKind::EL), opts);
  CHECK(fit.converged);
  REQUIRE(trace.size() > 1);
  for (size_t i = 1; i < trace.size(); ++i) {
    CHECK(trace[i] <= trace[i - 1] + 1e-12 * (1.0 + std::fabs(trace[i - 1])));
  }
}

TEST_CASE("blocks of length one reproduce the raw series") {
  Vector theta0(1);
  theta0 << 0.3;
  Dataset data = iid_logistic(120, theta0, 131);
  MomentModel model = model_logistic(1);
  OuterOptions opts;
  opts.tol = 1e-9;
  EstimationResult via_regime = estimate(data, model,
                                         regime_scheme(Regime::I, 120),
                                         make_link(LinkKind::EL), opts);
  EstimationResult via_scheme = estimate(data, model, make_scheme(120, 1, 1),
                                         make_link(LinkKind::EL), opts);
  CHECK((via_regime.theta_hat - via_scheme.theta_hat)
            .lpNorm<Eigen::Infinity>() == 0.0);

  // and the M=1 moments are the raw per-row values
  BlockMoments bm = block_moments(data, model, make_scheme(120, 1, 1),
                                  via_regime.theta_hat);
  for (long t = 0; t < 5; ++t) {
    Vector g = model.evaluate(data.row(t), via_regime.theta_hat);
    CHECK((bm.phi.row(t).transpose() - g).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("direct unblocked profile minimizer agrees on the toy model") {
  Dataset data = iid_normal(100, 1, 137);
  MomentModel model = toy_overid_model();
  BlockScheme scheme = make_scheme(100, 1, 1);
  LinkFunction link = make_link(LinkKind::EL);
  OuterOptions opts;
  opts.tol = 1e-10;
  opts.inner.tol = 1e-13;
  EstimationResult fit = estimate(data, model, scheme, link, opts);
  REQUIRE(fit.converged);

  // Golden-section on the one-dimensional profile, built without the block
  // machinery.
  auto profile = [&](double th) {
    Matrix phi(data.n(), 2);
    Vector thv(1);
    thv << th;
    for (long t = 0; t < data.n(); ++t) {
      phi.row(t) = model.evaluate(data.row(t), thv).transpose();
    }
    BlockMoments bm;
    bm.phi_bar = phi.colwise().mean().transpose();
    bm.omega_hat = (phi.transpose() * phi) / static_cast<double>(data.n());
    bm.phi = std::move(phi);
    InnerOptions io;
    io.tol = 1e-13;
    return solve_lambda(bm, link, io).objective;
  };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = -1.0, b = 1.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = profile(c), fd = profile(d);
  for (int i = 0; i < 120; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = profile(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = profile(d);
    }
  }
  const double direct = 0.5 * (a + b);
  CHECK(std::fabs(fit.theta_hat[0] - direct) < 1e-7);
}

TEST_CASE("toy over-identified estimate lands near the truth") {
  Dataset data = iid_normal(500, 1, 139);
  MomentModel model = toy_overid_model();
  BlockScheme scheme = make_scheme(500, 1, 1);
  EstimationResult fit =
      estimate(data, model, scheme, make_link(LinkKind::EL));
  REQUIRE(fit.converged);
  CovarianceEstimates cov = covariances(data, model, scheme, fit);
  CHECK(std::fabs(fit.theta_hat[0]) < 3.0 * cov.se[0]);
  // score identity at the returned solution
  CHECK(fit.diagnostics.at("score_norm") < 1e-8);
  // key-expansion identity holds up to its mean-value remainder
  CHECK(fit.diagnostics.at("key_identity_residual") >= 0.0);
  CHECK(fit.diagnostics.at("key_identity_residual") < 0.05);
}

TEST_CASE("estimate rejects bad configurations") {
  Dataset data = iid_normal(50, 2, 149);
  MomentModel model = model_mean(2);
  BlockScheme scheme = make_scheme(50, 1, 1);
  OuterOptions opts;
  opts.theta_init = Vector::Zero(3);
  CHECK_THROWS_AS(
      estimate(data, model, scheme, make_link(LinkKind::EL), opts),
      ConfigError);

  MomentModel under;
  under.r = 1;
  under.p = 2;
  under.evaluate = [](const Vector&, const Vector&) { return Vector::Zero(1); };
  CHECK_THROWS_AS(estimate(data, under, scheme, make_link(LinkKind::EL)),
                  ConfigError);
}

TEST_CASE("box bounds clamp the estimate and still report convergence") {
  Dataset data = iid_normal(100, 1, 157);
  Matrix shifted = data.values().array() + 0.5;
  Dataset sdata{shifted};
  MomentModel model = model_mean(1);
  ParameterBounds b;
  b.lower = Vector::Constant(1, -0.1);
  b.upper = Vector::Constant(1, 0.1);
  model.bounds = b;
  EstimationResult fit =
      estimate(sdata, model, make_scheme(100, 1, 1), make_link(LinkKind::ET));
  CHECK(fit.converged);
  CHECK(fit.theta_hat[0] == 0.1);  // pressed against the upper bound
}

TEST_CASE("multi-start returns the best converged fit deterministically") {
  Dataset data = iid_normal(150, 1, 163);
  MomentModel model = toy_overid_model();
  BlockScheme scheme = make_scheme(150, 1, 1);
  OuterOptions opts;
  opts.multi_start = 3;
  opts.seed = 5;
  EstimationResult a =
      estimate(data, model, scheme, make_link(LinkKind::EL), opts);
  EstimationResult b =
      estimate(data, model, scheme, make_link(LinkKind::EL), opts);
  CHECK(a.converged);
  CHECK((a.theta_hat - b.theta_hat).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("persistent hull failure raises an estimation error") {
  // Moments bounded away from zero for every theta: g = exp(theta) + 1 > 0.
  Dataset data = iid_normal(30, 1, 151);
  MomentModel stuck;
  stuck.r = 1;
  stuck.p = 1;
  stuck.evaluate = [](const Vector&, const Vector& th) -> Vector {
    Vector g(1);
    g[0] = std::exp(std::min(th[0], 30.0)) + 1.0;
    return g;
  };
  BlockScheme scheme = make_scheme(30, 1, 1);
  CHECK_THROWS_AS(estimate(data, stuck, scheme, make_link(LinkKind::EL)),
                  EstimationError);
}
