#pragma once

// Numerical checkers for the inequalities used in the proofs: the scalar
// helpers, Golden-Thompson and its triple improvement, the martingale
// exponential inequality, and constructive Chebyshev tail witnesses.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nclil/algebra.hpp"
#include "nclil/martingale.hpp"
#include "nclil/random.hpp"

namespace nclil {

enum class CheckStatus { Pass, Fail, HypothesisViolated, OutOfRange };
const char* to_string(CheckStatus s);

struct IneqReport {
  std::string id;
  std::string instance;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;      // rhs - lhs
  double rel_slack = 0.0;  // slack / max(|lhs|, |rhs|, 1)
  CheckStatus status = CheckStatus::Pass;
  bool pass() const { return status == CheckStatus::Pass; }
};

/// Fills slack fields; status Pass iff slack >= -tol max(|lhs|, |rhs|, 1).
IneqReport make_report(std::string id, std::string instance, double lhs, double rhs, double tol = 1e-9);

struct BatteryReport {
  std::string id;
  std::size_t count = 0;
  std::size_t failures = 0;
  double min_rel_slack = kInf;
  std::optional<IneqReport> worst;  // smallest rel_slack, ties to the lowest instance index
  bool pass() const { return failures == 0; }
};

/// Runs instance(i, rng_i) for i < count with rng_i seeded by
/// derive_seed(seed, i), sharded over `threads` workers (0 = hardware).
/// The result does not depend on the thread count.
BatteryReport run_battery(std::string id, std::size_t count, std::uint64_t seed,
                          const std::function<IneqReport(std::size_t, Rng&)>& instance, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Scalar helpers

/// F(s) = e^s - s - 1.
double scalar_F(double s);
/// g(s) = F(s) / s^2, g(0) = 1/2.
double scalar_g(double s);

// ---------------------------------------------------------------------------
// Golden-Thompson

struct GtReport {
  IneqReport report;   // tau(e^{a+b}) <= tau(e^a e^b)
  double symmetric_rhs = 0.0;  // tau(e^{a/2} e^b e^{a/2})
};
GtReport gt_gap(const Operator& a, const Operator& b);

enum class IgtMode { Kernel, Quadrature };

struct IgtValue {
  double value = 0.0;
  double error_estimate = 0.0;  // quadrature only
  bool converged = true;
};

/// int_0^inf tau(e^{c/2} (e^{-a} + t)^{-1} e^b (e^{-a} + t)^{-1} e^{c/2}) dt.
IgtValue igt_rhs(const Operator& a, const Operator& b, const Operator& c, IgtMode mode = IgtMode::Kernel);
/// tau(e^{a+b+c}) against the kernel value of igt_rhs.
IneqReport igt_gap(const Operator& a, const Operator& b, const Operator& c, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Exponential inequality for martingales

/// exp(F(lam M) D2 / M^2).
double exp_bound1(double M, double D2, double lam);

struct ExpHypotheses {
  double max_diff_norm = 0.0;   // max_k ||d_k||
  double bracket_max = 0.0;     // largest eigenvalue of sum E_{k-1}(d_k^2)
  bool holds = false;
};
ExpHypotheses exp_hypotheses(const Martingale& m, double M, double D2);

/// One report per lambda. A failed hypothesis marks every report
/// HypothesisViolated instead of evaluating the inequality.
std::vector<IneqReport> exp_check1(const Martingale& m, double M, double D2, std::span<const double> lam_grid);

enum class Exp2Mode { AsStated, Corrected };
const char* to_string(Exp2Mode m);

struct Exp2Bound {
  double rhs = 0.0;      // exp((1 + eps) lam^2 D2 / 2)
  double lam_max = 0.0;  // 3 eps / M (as stated) or 3 eps / ((1 + eps) M)
  bool in_range = false;
};
Exp2Bound exp_bound2(double M, double D2, double lam, double eps, Exp2Mode mode);

std::vector<IneqReport> exp_check2(const Martingale& m, double M, double D2, std::span<const double> lam_grid,
                                   double eps, Exp2Mode mode);

/// tau(e^{lam x}) for the single skewed two-point step, closed form.
double twopoint_mgf(const TwoPointLaw& law, double lam);

/// Scans single-step skewed two-point instances with M fixed, p over a log
/// grid and lam in [lam_max / 2, lam_max] of the as-stated range, checking
/// tau(e^{lam d}) against the part (2) bound with D2 = Var(d). Returns the
/// instance with the largest violation (or the smallest slack if none).
IneqReport exp2_counterexample_search(double eps, double M, std::size_t p_points = 60, std::size_t lam_points = 31);

// ---------------------------------------------------------------------------
// Tail witnesses

/// |u|^p <= p^p e^{-p} (e^u + e^{-u}).
IneqReport poly_exp_bound(double u, double p);
/// Worst case of poly_exp_bound over the grid.
IneqReport poly_exp_grid(double p, std::span<const double> us);

struct WitnessTail {
  Operator e;                  // projection
  double t = 0.0;
  double deficit = 0.0;        // tau(1 - e)
  double bound = 0.0;          // sum_i t^{-p} ||x_i||_p^p
  std::vector<double> norms;   // ||x_i e||_inf
  /// ||x_i e|| <= t (1 + 1e-9) for all i and deficit <= bound.
  bool contracts_hold() const;
};

/// e = meet_i 1_[-t, t](x_i). Non-self-adjoint inputs need `dilate_inputs`,
/// in which case the witness lives in A (x) M_2.
WitnessTail chebyshev_witness(std::span<const Operator> xs, double t, double p, bool dilate_inputs = false);

/// Deficit of the witness for (x_i) at t against that for (a_i x_i), a_i >= 1.
IneqReport scaling_monotonicity_check(std::span<const Operator> xs, std::span<const double> coeffs, double t);

}  // namespace nclil
