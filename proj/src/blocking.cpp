#include "gel/blocking.hpp"

#include <cmath>

#include "gel/errors.hpp"

namespace gel {

BlockScheme make_scheme(long n, int M, int L) {
  if (n < 1) throw ConfigError("make_scheme: n must be positive");
  if (L < 1) throw ConfigError("make_scheme: violated 1 <= L (got L = " +
                               std::to_string(L) + ")");
  if (M < L) throw ConfigError("make_scheme: violated L <= M (got L = " +
                               std::to_string(L) + ", M = " +
                               std::to_string(M) + ")");
  if (static_cast<long>(M) > n) {
    throw ConfigError("make_scheme: violated M <= n (got M = " +
                      std::to_string(M) + ", n = " + std::to_string(n) + ")");
  }
  BlockScheme s;
  s.M = M;
  s.L = L;
  s.n = n;
  s.Q = static_cast<int>((n - M) / L + 1);
  return s;
}

BlockScheme regime_scheme(Regime regime, long n) {
  const double root = std::pow(static_cast<double>(n), 0.2);
  const int m_small = std::max(1, static_cast<int>(std::floor(root)));
  const int m_large = std::max(1, static_cast<int>(std::floor(3.0 * root)));
  int M = 1;
  int L = 1;
  switch (regime) {
    case Regime::I:
      M = L = 1;
      break;
    case Regime::II:
      M = m_small;
      L = std::max(1, M / 2);
      break;
    case Regime::III:
      M = L = m_small;
      break;
    case Regime::IV:
      M = m_large;
      L = std::max(1, M / 2);
      break;
    case Regime::V:
      M = L = m_large;
      break;
  }
  return make_scheme(n, M, L);
}

Regime parse_regime(const std::string& name) {
  if (name == "i") return Regime::I;
  if (name == "ii") return Regime::II;
  if (name == "iii") return Regime::III;
  if (name == "iv") return Regime::IV;
  if (name == "v") return Regime::V;
  throw ConfigError("unknown regime '" + name + "' (expected i..v)");
}

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::I:
      return "i";
    case Regime::II:
      return "ii";
    case Regime::III:
      return "iii";
    case Regime::IV:
      return "iv";
    case Regime::V:
      return "v";
  }
  return "?";
}

namespace {

void check_scheme(const Dataset& data, const BlockScheme& scheme) {
  if (scheme.n != data.n()) {
    throw ConfigError("block scheme built for n = " + std::to_string(scheme.n) +
                      " applied to data with n = " + std::to_string(data.n()));
  }
}

// First block (1-based) containing 0-based row t, for error reporting.
int first_block_of(const BlockScheme& s, long t) {
  long q0 = std::max(0L, (t - s.M + s.L) / s.L);  // smallest q with start <= t
  for (long q = q0; q < s.Q; ++q) {
    long start = q * s.L;
    if (t >= start && t < start + s.M) return static_cast<int>(q) + 1;
  }
  return -1;
}

}  // namespace

BlockMoments block_moments(const Dataset& data, const MomentModel& model,
                           const BlockScheme& scheme, const Vector& theta) {
  check_scheme(data, scheme);
  const int Q = scheme.Q;
  const int r = model.r;
  const long used = scheme.covered_rows();

  // Evaluate g_t once per covered row; overlapping blocks reuse rows.
  Matrix g(used, r);
  for (long t = 0; t < used; ++t) {
    Vector gt = model.evaluate(data.row(t), theta);
    if (gt.size() != r) {
      throw ConfigError("model.evaluate returned dimension " +
                        std::to_string(gt.size()) + ", expected r = " +
                        std::to_string(r));
    }
    if (!gt.allFinite()) {
      throw NumericError("non-finite moment value at row t = " +
                         std::to_string(t + 1) + " (block q = " +
                         std::to_string(first_block_of(scheme, t)) + ")");
    }
    g.row(t) = gt.transpose();
  }

  BlockMoments out;
  out.phi.resize(Q, r);
  const double invM = 1.0 / scheme.M;
  for (int q = 0; q < Q; ++q) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(r);
    const long start = scheme.block_start(q);
    for (int m = 0; m < scheme.M; ++m) acc += g.row(start + m);
    out.phi.row(q) = acc * invM;
  }
  out.phi_bar = out.phi.colwise().mean().transpose();
  out.omega_hat = (out.phi.transpose() * out.phi) / static_cast<double>(Q);
  return out;
}

Matrix block_jacobian(const Dataset& data, const MomentModel& model,
                      const BlockScheme& scheme, const Vector& theta) {
  check_scheme(data, scheme);
  const long used = scheme.covered_rows();

  // grad phi_bar is the multiplicity-weighted average of per-row jacobians:
  // count how many blocks contain each row, then weight by count/(Q*M).
  Vector mult = Vector::Zero(used);
  for (int q = 0; q < scheme.Q; ++q) {
    const long start = scheme.block_start(q);
    for (int m = 0; m < scheme.M; ++m) mult[start + m] += 1.0;
  }
  Matrix acc = Matrix::Zero(model.r, model.p);
  for (long t = 0; t < used; ++t) {
    if (mult[t] == 0.0) continue;
    acc += mult[t] * model.jacobian_at(data.row(t), theta);
  }
  acc /= static_cast<double>(scheme.Q) * scheme.M;
  if (!acc.allFinite()) {
    throw NumericError("non-finite jacobian in block_jacobian");
  }
  return acc;
}

Vector sample_mean_g(const Dataset& data, const MomentModel& model,
                     const Vector& theta) {
  Vector acc = Vector::Zero(model.r);
  for (long t = 0; t < data.n(); ++t) {
    acc += model.evaluate(data.row(t), theta);
  }
  return acc / static_cast<double>(data.n());
}

}  // namespace gel
