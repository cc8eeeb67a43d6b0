#pragma once

// Noncommutative martingales over a Filtration: brackets and the L / u_n
// scales, the 2x2 dilation, truncation decompositions and the random
// generators used by the experiments.

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "nclil/algebra.hpp"
#include "nclil/conditional_expectation.hpp"
#include "nclil/random.hpp"

namespace nclil {

/// L(x) = max(1, ln ln x) for x > 1 and L(x) = 1 on [0, 1]. Throws
/// std::invalid_argument for negative or NaN input.
double iterated_log(double x);
/// sqrt(L(x)).
inline double log_scale(double x) { return std::sqrt(iterated_log(x)); }

struct MartingaleCheck {
  double adapted_error = 0.0;     // max_k ||E_k(x_k) - x_k||_inf
  double martingale_error = 0.0;  // max_k ||E_{k-1}(x_k) - x_{k-1}||_inf / max(1, ||x_k||_inf)
  bool ok(double tol = 1e-9) const { return adapted_error <= tol && martingale_error <= tol; }
};

class Martingale {
 public:
  /// x_0 .. x_N with x_0 = 0; x_k must live in level k of the filtration.
  /// With `validate` the martingale property is checked at tolerance 1e-9
  /// (std::invalid_argument on failure).
  Martingale(std::shared_ptr<const Filtration> filtration, std::vector<Operator> values, bool validate = true);
  static Martingale from_differences(std::shared_ptr<const Filtration> filtration, std::vector<Operator> diffs,
                                     bool validate = true);

  const Filtration& filtration() const { return *filtration_; }
  const std::shared_ptr<const Filtration>& filtration_ptr() const { return filtration_; }
  const AlgebraPtr& algebra() const { return filtration_->algebra(); }
  std::size_t steps() const { return values_.size() - 1; }
  const Operator& x(std::size_t k) const { return values_.at(k); }
  /// d_k = x_k - x_{k-1}, k >= 1.
  const Operator& d(std::size_t k) const { return diffs_.at(k - 1); }
  const std::vector<Operator>& values() const { return values_; }
  const std::vector<Operator>& differences() const { return diffs_; }
  bool self_adjoint() const { return self_adjoint_; }

  MartingaleCheck check() const;

 private:
  std::shared_ptr<const Filtration> filtration_;
  std::vector<Operator> values_;
  std::vector<Operator> diffs_;
  bool self_adjoint_ = true;
};

/// Per-n scales, index 0..N (index 0 holds the empty sums).
struct ScaleTrack {
  std::vector<double> col;  // ||sum_{i<=n} E_{i-1}(d_i* d_i)||
  std::vector<double> row;  // ||sum_{i<=n} E_{i-1}(d_i d_i*)||
  std::vector<double> s2;   // col (the single bracket when self-adjoint)
  std::vector<double> t2;   // max(col, row)
  std::vector<double> u;    // sqrt(L(s2))
  std::vector<double> v;    // sqrt(L(t2))
};

ScaleTrack bracket(const Martingale& m);
/// sum_{i<=n} E_{i-1}(d_i* d_i) as an operator.
Operator bracket_operator(const Martingale& m, std::size_t n);

/// x -> [[0, x], [x*, 0]] in A (x) M_2 (M_2 outer).
AlgebraPtr doubled_algebra(const AlgebraPtr& algebra);
Operator dilate_operator(const AlgebraPtr& doubled, const Operator& x);
/// Self-adjoint martingale over (M_k (x) M_2)_k. Its base level is M_2,
/// not the scalars.
Martingale dilate(const Martingale& m);

struct TruncationParts {
  Operator small;  // d' - E_{k-1}(d'),   d' = d 1_[0,cutoff](|d|)
  Operator large;  // d'' - E_{k-1}(d''), d'' = d 1_(cutoff,inf)(|d|)
};
/// Requires self-adjoint d; `level` is k, so the centering uses level k-1.
TruncationParts truncate_center(const Operator& d, double cutoff, const Filtration& filtration, std::size_t level);

struct HwParts {
  double c1 = 0.0, c2 = 0.0;
  Operator small_raw, mid_raw, large_raw;  // y 1_[0,c1](|y|), y 1_(c1,c2](|y|), y 1_(c2,inf)(|y|)
  Operator yprime, z, w;                   // the same, minus their traces
};
/// Three-way split with cuts e sqrt(k) / (2 u_k) and sqrt(k).
HwParts hw_split(const Operator& y, std::size_t k, double e);

// ---------------------------------------------------------------------------
// Generators

/// 2^N equal atoms as the tensor product of N two-atom factors; d_k is the
/// +-1 sign of the k-th factor, so every sign path occurs once and E_k is
/// exact. The seed picks the sign convention of each factor. N <= 12.
Martingale gen_dyadic_rademacher(std::size_t steps, std::uint64_t seed);
/// `atoms` equal atoms each carrying an independent sampled +-1 path, with
/// M_k generated by the first k sign columns. For atoms != 2^N this is a
/// martingale only up to sampling error; it is returned unvalidated and
/// check() reports the defect.
Martingale gen_sampled_rademacher(std::size_t steps, std::size_t atoms, std::uint64_t seed);

/// Streamed classical regime: `atoms` independent +-1 walks, 64 signs per
/// generator draw. s_n^2 = n by model.
class RademacherEnsemble {
 public:
  RademacherEnsemble(std::size_t atoms, std::uint64_t seed);
  /// Advances every walk by one step.
  void step();
  std::size_t atoms() const { return sums_.size(); }
  std::size_t time() const { return time_; }
  const std::vector<std::int64_t>& sums() const { return sums_; }

 private:
  Rng rng_;
  std::vector<std::int64_t> sums_;
  std::size_t time_ = 0;
};

enum class HermitianLaw {
  TwoPoint,          // random unitary conjugate of a traceless +-1 diagonal (even d)
  BoundedHermitian,  // random traceless Hermitian, rescaled to the target norm
  SigmaX,            // fixed sigma_x (+) ... (+) sigma_x (even d)
};

struct TensorHermitianOptions {
  std::size_t steps = 4;
  int factor_dim = 2;
  std::uint64_t seed = 0;
  HermitianLaw law = HermitianLaw::TwoPoint;
  double norm = 1.0;                // target ||h_k||
  std::optional<double> envelope;   // if set, ||h_k|| <= e sqrt(k) / u_k as well
  bool commutative = false;         // factors are d equal atoms instead of M_d
  std::size_t dim_cap = 4096;
};

/// y_k = 1 (x) ... (x) h_k (x) ... (x) 1 on the tensor tower; E_{k-1}(y_k) = 0.
Martingale gen_tensor_hermitian(const TensorHermitianOptions& options);

/// Mean-zero two-point law: value M with weight p, -Mp/(1-p) with weight 1-p.
struct TwoPointLaw {
  double p = 0.5;
  double M = 1.0;
  double high() const { return M; }
  double low() const { return -M * p / (1.0 - p); }
  double mean() const { return 0.0; }
  double variance() const { return M * M * p / (1.0 - p); }
  double norm() const { return std::max(M, std::abs(low())); }
  AlgebraPtr algebra() const;
  Operator difference(const AlgebraPtr& algebra) const;
};

/// Throws std::invalid_argument unless 0 < p < 1 and M > 0.
TwoPointLaw gen_skewed_twopoint(double p, double M);
/// N independent copies on the tensor tower of two-atom factors.
Martingale gen_skewed_tower(std::size_t steps, const TwoPointLaw& law);

/// h with independent complex Gaussian entries of variance 1/d (Hermitian),
/// so ||h|| -> 2 as d grows.
Matrix gue_sample(int d, Rng& rng);

/// Streaming partial sums x_n = h_1 + ... + h_n of independent GUE samples.
class GueStream {
 public:
  GueStream(int dim, std::uint64_t seed);
  const Matrix& step();
  const Matrix& current() const { return sum_; }
  std::size_t time() const { return time_; }
  int dim() const { return dim_; }

 private:
  int dim_;
  Rng rng_;
  Matrix sum_;
  std::size_t time_ = 0;
};

/// x_0 .. x_N as operators on M_d. d <= 512 and N d^2 <= 2e7.
std::vector<Operator> gen_gue_sum(int dim, std::size_t steps, std::uint64_t seed);

}  // namespace nclil
