#pragma once

#include <string>

#include "gel/dataset.hpp"
#include "gel/model.hpp"

namespace gel {

// Overlapping-block geometry: blocks of length M spaced L apart,
// Q = floor((n - M)/L) + 1 of them. Block q (1-based) covers rows
// (q-1)L+1 .. (q-1)L+M. Rows past the last block end are unused.
struct BlockScheme {
  int M = 1;
  int L = 1;
  int Q = 0;
  long n = 0;

  // 0-based first row of block q in [0, Q).
  long block_start(int q) const { return static_cast<long>(q) * L; }
  // 0-based one-past-last covered row over all blocks.
  long covered_rows() const { return static_cast<long>(Q - 1) * L + M; }
};

// Blocking regimes used for parameter sweeps:
//   i    L = M = 1
//   ii   M = floor(n^{1/5}),   L = max(1, floor(M/2))
//   iii  L = M = floor(n^{1/5})
//   iv   M = floor(3 n^{1/5}), L = max(1, floor(M/2))
//   v    L = M = floor(3 n^{1/5})
enum class Regime { I, II, III, IV, V };

BlockScheme make_scheme(long n, int M, int L);
BlockScheme regime_scheme(Regime regime, long n);
Regime parse_regime(const std::string& name);  // "i".."v"
std::string regime_name(Regime regime);

// Blockwise averages of the estimating equation at a fixed theta.
struct BlockMoments {
  Matrix phi;        // Q x r, row q = phi_q(theta)
  Vector phi_bar;    // column mean of phi
  Matrix omega_hat;  // Q^{-1} sum phi_q phi_q'
  int Q() const { return static_cast<int>(phi.rows()); }
  int r() const { return static_cast<int>(phi.cols()); }
};

// Exact blockwise averages; throws NumericError carrying (q, t) if the model
// returns a non-finite value. Summation order is fixed left to right.
BlockMoments block_moments(const Dataset& data, const MomentModel& model,
                           const BlockScheme& scheme, const Vector& theta);

// Mean over blocks of the blockwise-averaged jacobians, i.e. grad phi_bar.
Matrix block_jacobian(const Dataset& data, const MomentModel& model,
                      const BlockScheme& scheme, const Vector& theta);

// Plain sample average of g_t(theta) over all n rows (no blocking); used for
// the phi_bar vs g_bar boundary-effect diagnostic.
Vector sample_mean_g(const Dataset& data, const MomentModel& model,
                     const Vector& theta);

}  // namespace gel
