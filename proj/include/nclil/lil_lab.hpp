#pragma once

// Finite-horizon LIL experiments: the alpha' sequence, the epsilon pack and
// eta-block scheme, ratio tracking with witness projections, the
// Hartman-Wintner pipeline, the G scan and Kronecker / Borel-Cantelli
// diagnostics.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nclil/algebra.hpp"
#include "nclil/martingale.hpp"

namespace nclil {

// ---------------------------------------------------------------------------
// alpha'

struct AlphaPrime {
  std::vector<double> values;
  bool dominates = false;              // alpha'_n >= alpha_n
  bool nonincreasing = false;          // alpha'_{n+1} <= alpha'_n
  bool product_nondecreasing = false;  // alpha'_{n+1} beta_{n+1} >= alpha'_n beta_n, rounded products
  /// max of alpha over the last quarter of the prefix divided by alpha_bar_1;
  /// 1 means the prefix shows no decay at all.
  double tail_ratio = 1.0;
  bool decays() const { return tail_ratio < 1.0; }
  bool ok() const { return dominates && nonincreasing && product_nondecreasing; }
};

/// alpha'_1 = abar_1, alpha'_{n+1} = max(abar_{n+1}, alpha'_n beta_n / beta_{n+1})
/// with abar_n the sup of alpha over the prefix tail. Where rounding would
/// break the product ordering the candidate is raised by ulps (never above
/// alpha'_n). Throws std::invalid_argument unless alpha > 0, beta > 0
/// nondecreasing and both have the same nonzero length.
AlphaPrime alpha_prime(std::span<const double> alpha, std::span<const double> beta);

// ---------------------------------------------------------------------------
// Parameters and blocks

struct EpsilonPack {
  double delta_prime = 0.0;
  double delta = 0.0;
  double eps = 0.0;
  double eps_prime = 0.0;
  double eta = 0.0;
  /// 1 + delta' > eta (1 + delta) / (1 - eps') and (1 + delta)^2 / (1 + eps) > 1,
  /// evaluated in double precision.
  bool valid() const;
  /// (1 + delta)^2 / (1 + eps).
  double exponent() const;
};

/// delta = delta'/3; eps = ((1+delta)^2 - 1)/2 halved until < 1;
/// eps' = min(delta'/10, (delta'/3)/(1+delta')); eta = min(1 + delta'/10,
/// midpoint of (1, eta_max), 2 - 1e-6). Throws std::invalid_argument for
/// delta' <= 0 and std::logic_error if the result fails valid().
EpsilonPack epsilon_solver(double delta_prime);

struct BlockScheme {
  double eta2 = 0.0;                 // eta^2
  std::vector<std::size_t> k;        // k_0 = 0, k_1, ...
  std::vector<double> s2;            // s^2 at k_n
  std::vector<double> u;             // u at k_n
  /// s2_{k_n+1} u2_{k_n+1} / (s2_{k_{n+1}} u2_{k_{n+1}}) for n >= 1 while
  /// k_{n+1} is inside the horizon; entry i belongs to n = i + 1.
  std::vector<double> horizon_ratio;
  double horizon_target = 0.0;       // (1 - eps')^2 / eta^2
  std::optional<std::size_t> horizon_start;  // first n from which the ratio check holds onward
  /// s2[k_n + 1] >= eta^{2n} > s2[k_n] for every n >= 1 and k nondecreasing.
  bool boundaries_hold(std::span<const double> s2_track) const;
};

/// s2 is indexed 0..N (s2[0] = 0 as in ScaleTrack). k_n = inf{ j : s2[j+1] >= eta2^n }
/// for every n whose level is reached. Throws std::invalid_argument if s2 is
/// not nondecreasing, eta2 is outside (1, 4) or eta2 itself is never reached.
BlockScheme blocks_squared(std::span<const double> s2, double eta2, double eps_prime = 0.0);
inline BlockScheme blocks(std::span<const double> s2, double eta, double eps_prime = 0.0) {
  return blocks_squared(s2, eta * eta, eps_prime);
}

// ---------------------------------------------------------------------------
// Ratio experiments

enum class LilRegime { Classical, Tensor, Gue };
const char* to_string(LilRegime r);

struct LilConfig {
  LilRegime regime = LilRegime::Tensor;
  std::size_t steps = 8;
  std::vector<std::size_t> checkpoints;  // empty: a default log-spaced set
  double budget = 0.05;                  // trace budget for the s-number and witness
  std::uint64_t seed = 0;
  // classical
  std::size_t atoms = 2048;
  std::size_t window_start = 1000;
  // tensor
  int factor_dim = 2;
  HermitianLaw law = HermitianLaw::TwoPoint;
  double norm = 1.0;  // 0 gives the degenerate zero martingale
  bool commutative = false;
  // gue
  int dim = 100;
};

struct CheckpointRow {
  std::size_t n = 0;
  double s2 = 0.0;
  double u = 0.0;
  double op_ratio = 0.0;       // ||x_n|| / (s_n u_n)
  double snumber_ratio = 0.0;  // mu_budget(x_n) / (s_n u_n)
  double witness_ratio = 0.0;  // ||x_n e_n|| / (s_n u_n)
  double deficit = 0.0;        // tau(1 - e_n)
};

struct LilReport {
  LilConfig config;
  std::vector<CheckpointRow> rows;
  /// Classical only: per-atom max over window_start <= n <= N of |S_n| / sqrt(n L(n)).
  std::vector<double> atom_maxima;
  double median = 0.0;
  double p99 = 0.0;
  double max_op_ratio = 0.0;
  double max_snumber_ratio = 0.0;
  double max_witness_ratio = 0.0;
  bool ordering_holds = true;      // snumber <= witness + 1e-9 <= op + 2e-9 at every row
  bool certificates_hold = true;   // deficit <= budget at every row
  bool ok() const { return ordering_holds && certificates_hold; }
};

/// Witness at checkpoint j: e_j = meet_{i<=j} 1_[0, mu_{b_i}](|x_{n_i}|) with
/// b_i = budget 2^{-(j-i+1)}, so tau(1 - e_j) < budget and the witness ratio
/// sits between the s-number ratio and the operator-norm ratio.
/// Classical: streamed ensemble, s_n^2 = n. Tensor: gen_tensor_hermitian with
/// the tracked bracket. Gue: GueStream, s_n^2 = n (E h^2 = 1).
LilReport lil_run(const LilConfig& config);
/// One report per seed, in seed order, computed concurrently.
std::vector<LilReport> lil_sweep(const LilConfig& config, std::span<const std::uint64_t> seeds, unsigned threads = 0);

/// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Hartman-Wintner pipeline

struct HwConfig {
  std::size_t steps = 1000;      // split analysis horizon
  std::size_t tower_steps = 6;   // materialized tower for the combined ratios
  double e = 1.0;
};

struct HwStep {
  std::size_t k = 0;
  double c1 = 0.0, c2 = 0.0;
  double yprime_norm = 0.0;
  double envelope = 0.0;        // e sqrt(k) / u_k
  double z_l2sq = 0.0;          // ||z_k||_2^2
  double w_support = 0.0;       // tau(1_(c2, inf)(|y|))
  double resum_error = 0.0;     // ||y' + z + w - y||
  double cross_error = 0.0;     // max norm of products of distinct raw parts
};

struct HwRatioRow {
  std::size_t n = 0;
  double total = 0.0, yprime = 0.0, z = 0.0, w = 0.0;  // ||sum|| / (s_n u_n)
};

struct HwReport {
  HwConfig config;
  double l2_norm_sq = 0.0;                // tau(y^2)
  std::vector<HwStep> steps;
  bool envelope_holds = true;
  std::vector<double> z_partial;          // sum_{k<=n} ||z_k||_2^2 / (k u_k^2)
  double z_bound = 0.0;                   // sum_lambda w_lambda lambda^2 G_{e/2}(|lambda|)
  bool z_bounded = true;
  double w_budget = 0.0;                  // sum_k tau(1_(sqrt k, inf)(|y|))
  bool w_budget_holds = true;             // w_budget <= tau(y^2)
  double max_resum_error = 0.0;
  double max_cross_error = 0.0;
  std::vector<HwRatioRow> ratios;
  bool ok() const;
};

/// i.i.d. copies of the traceless self-adjoint h with tau(h^2) <= 1 (throws
/// std::invalid_argument otherwise). Splits are computed on the factor, which
/// is exact because the tensor embedding preserves spectra; the combined
/// ratios use a materialized tower of up to `tower_steps` factors, truncated
/// while its total dimension stays <= 256.
HwReport hw_pipeline(const Operator& h, const HwConfig& config);

// ---------------------------------------------------------------------------
// G scan, Kronecker and Borel-Cantelli

struct GValue {
  double value = 0.0;
  std::size_t lo = 0, hi = 0;  // summation window, empty when hi < lo
};

/// G(t) = sum of 1/(n u_n^2) over sqrt(n) >= t > e sqrt(n)/u_n, u_n^2 = L(n).
/// Throws std::runtime_error if the window passes `window_cap`. A positive
/// `slack` widens both window ends by that relative amount.
GValue g_value(double e, double t, std::size_t window_cap = 1000000000, double slack = 0.0);

struct GScan {
  std::vector<double> t;
  std::vector<GValue> values;
  double max = 0.0;
  /// Least-squares slope of G against ln t over the upper half of the grid,
  /// relative to the max.
  double trend = 0.0;
  bool finite = true;
  bool non_trending() const { return finite && trend <= 0.05; }
};
GScan g_scan(double e, std::span<const double> t_grid, std::size_t window_cap = 1000000000);

struct KroneckerReport {
  std::vector<double> weighted_norms;  // ||(A_n - A_N) e||, A_n = sum_{k<=n} x_k / alpha_k
  std::vector<double> average_norms;   // ||(1/alpha_n) sum_{k<=n} x_k e||
  double deficit = 0.0;
  double cauchy_tail = 0.0;            // max weighted_norms over the second half
  double average_start = 0.0;          // average_norms at N/2
  double average_end = 0.0;            // average_norms at N
  bool decays() const { return average_end <= average_start; }
};

/// Self-adjoint terms; alphas positive nondecreasing. The witness is the meet
/// of 1_[0, mu](|A_n - A_N|) over a log-spaced set of tail indices with
/// budgets summing below `budget`.
KroneckerReport kronecker_diag(std::span<const Operator> x_terms, std::span<const double> alphas, double budget);

/// 8 [(2 ln eta) n]^{-(1+delta)^2/(1+eps)}.
double bc_envelope(const EpsilonPack& pack, std::size_t n);
/// 8 exp(-(1+delta)^2 L(s2) / (1+eps)) = 8 (ln s2)^{-exponent} once L(s2) > 1.
double section_chain_bound(const EpsilonPack& pack, double s2);

struct BcReport {
  double exponent = 0.0;
  bool summable = false;               // exponent > 1
  std::vector<double> deficits;        // block n = first_block + i
  std::vector<double> envelope;
  std::vector<double> deficit_partial;
  std::vector<double> envelope_partial;
  bool under_envelope = true;
};
BcReport bc_budget(std::span<const double> block_deficits, const EpsilonPack& pack, std::size_t first_block = 1);

struct BlockDeficit {
  std::size_t n = 0;
  std::size_t k_lo = 0, k_hi = 0;  // block k_n < k <= k_{n+1}
  double threshold = 0.0;          // sqrt(2) (1 + delta) s u at k_{n+1}
  double lambda = 0.0;             // threshold / ((1 + eps) s^2)
  bool gate = false;               // lambda max_k ||d_k|| inside the corrected part (2) range
  double observed = 0.0;           // tau(1 - meet 1_[-thr, thr](x_k))
  double certified = 0.0;          // section_chain_bound
  double envelope = 0.0;
};

/// Runs the block chain on a self-adjoint martingale: blocks from its bracket,
/// meet witnesses per block and the certified bounds.
std::vector<BlockDeficit> block_deficits(const Martingale& m, const EpsilonPack& pack);

}  // namespace nclil
