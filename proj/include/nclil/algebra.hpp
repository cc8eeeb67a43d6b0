#pragma once

// Finite-dimensional tracial *-algebras realized as block-diagonal complex
// matrix algebras with a weighted normalized trace.

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace nclil {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Block {
  int dim = 1;
  double weight = 1.0;
  bool operator==(const Block&) const = default;
};

/// A direct sum of full matrix algebras M_{d_1} + ... + M_{d_m} with the
/// faithful tracial state tau(x) = sum_i w_i tr(x_i) / d_i.
class TracialAlgebra {
 public:
  /// Throws std::invalid_argument unless every dim > 0, every weight > 0
  /// and the weights sum to 1 within 1e-12.
  explicit TracialAlgebra(std::vector<Block> blocks);

  static std::shared_ptr<const TracialAlgebra> make(std::vector<Block> blocks);
  /// One block M_d with weight 1.
  static std::shared_ptr<const TracialAlgebra> matrix(int dim);
  /// Commutative algebra l_inf^n with the given atom weights.
  static std::shared_ptr<const TracialAlgebra> atoms(std::span<const double> weights);
  static std::shared_ptr<const TracialAlgebra> uniform_atoms(std::size_t count);

  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  const Block& block(std::size_t i) const { return blocks_[i]; }
  /// Sum of block dimensions (size of the block-diagonal representation).
  std::size_t total_dim() const { return total_dim_; }
  /// Sum of d_i^2, the linear dimension of the algebra.
  std::size_t linear_dim() const;
  bool commutative() const { return max_dim_ == 1; }

  bool operator==(const TracialAlgebra& other) const { return blocks_ == other.blocks_; }

 private:
  std::vector<Block> blocks_;
  std::size_t total_dim_ = 0;
  int max_dim_ = 0;
};

using AlgebraPtr = std::shared_ptr<const TracialAlgebra>;

bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b);

/// An element of a TracialAlgebra: one square complex matrix per block.
class Operator {
 public:
  /// Throws std::invalid_argument on a block count or shape mismatch.
  Operator(AlgebraPtr algebra, std::vector<Matrix> blocks);

  static Operator zero(AlgebraPtr algebra);
  static Operator identity(AlgebraPtr algebra);
  static Operator scalar(AlgebraPtr algebra, cplx value);
  /// Diagonal operator; `entries` runs over the block-diagonal representation
  /// in block order and must have total_dim() elements.
  static Operator diagonal(AlgebraPtr algebra, std::span<const double> entries);

  const AlgebraPtr& algebra() const { return algebra_; }
  const std::vector<Matrix>& blocks() const { return blocks_; }
  const Matrix& block(std::size_t i) const { return blocks_[i]; }
  std::size_t num_blocks() const { return blocks_.size(); }

  Operator adjoint() const;
  /// ||x - x*||_inf <= 1e-10 max(1, ||x||_inf).
  bool is_self_adjoint() const;

  Operator& operator+=(const Operator& other);
  Operator& operator-=(const Operator& other);
  Operator& operator*=(cplx s);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(Operator a, double s) { return a *= cplx(s, 0.0); }
  friend Operator operator*(double s, Operator a) { return a *= cplx(s, 0.0); }
  friend Operator operator-(Operator a) { return a *= cplx(-1.0, 0.0); }
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  AlgebraPtr algebra_;
  std::vector<Matrix> blocks_;
};

void require_same_algebra(const AlgebraPtr& a, const AlgebraPtr& b);
void require_member(const TracialAlgebra& algebra, const Operator& x);

cplx trace(const TracialAlgebra& algebra, const Operator& x);
cplx trace(const Operator& x);
/// Real trace of a self-adjoint operator; throws std::domain_error when the
/// imaginary part exceeds 1e-10 max(1, |tau(x)|).
double real_trace(const Operator& x);

/// <x, y> = tau(x* y).
cplx hilbert_inner(const TracialAlgebra& algebra, const Operator& x, const Operator& y);
cplx hilbert_inner(const Operator& x, const Operator& y);

/// tau(|x|^p)^{1/p} for 1 <= p < inf; operator norm for p = kInf.
double lp_norm(const TracialAlgebra& algebra, const Operator& x, double p);
double lp_norm(const Operator& x, double p);
double op_norm(const Operator& x);
/// Frobenius norm of the block-diagonal representation (unnormalized).
double frobenius_norm(const Operator& x);

/// Max over blocks of the operator norm of the commutator xy - yx.
double commutator_norm(const Operator& x, const Operator& y);

struct WeightedValue {
  double value = 0.0;
  double weight = 0.0;  // trace weight of a single copy: w_i / d_i
  int multiplicity = 1;
};

/// Singular values of x with trace weights, sorted descending.
std::vector<WeightedValue> singular_values(const Operator& x);

struct SpectrumBlock {
  Eigen::VectorXd values;  // descending
  Matrix vectors;          // orthonormal columns matching `values`
};

/// Eigen-decomposition of a self-adjoint operator, block by block.
class Spectrum {
 public:
  Spectrum(AlgebraPtr algebra, std::vector<SpectrumBlock> blocks);

  const AlgebraPtr& algebra() const { return algebra_; }
  const std::vector<SpectrumBlock>& blocks() const { return blocks_; }

  /// Distinct eigenvalues per block (merged within 1e-12 relative) with
  /// per-copy trace weight and multiplicity, sorted descending overall.
  std::vector<WeightedValue> weighted() const;
  double max() const;
  double min() const;
  Operator reconstruct() const;

 private:
  AlgebraPtr algebra_;
  std::vector<SpectrumBlock> blocks_;
};

Spectrum herm_spectrum(const Operator& x);

/// sum_j f(lambda_j) P_j. Throws std::domain_error if f is not finite on the
/// spectrum.
Operator apply_function(const Spectrum& spectrum, const std::function<double(double)>& f);
Operator exp_herm(const Operator& x);

/// Real interval with open or closed endpoints; infinite endpoints are open.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  static Interval open_above(double a) { return {a, kInf, false, false}; }      // (a, inf)
  static Interval closed_above(double a) { return {a, kInf, true, false}; }     // [a, inf)
  static Interval closed(double a, double b) { return {a, b, true, true}; }     // [a, b]
  static Interval left_open(double a, double b) { return {a, b, false, true}; } // (a, b]

  /// Membership with the cut convention: values within 1e-12 max(1, |c|) of
  /// a finite endpoint c are treated as equal to c.
  bool contains(double v) const;
};

/// Spectral projection 1_I(x) for self-adjoint x, or 1_I(|x|) with
/// `of_modulus` (then x may be arbitrary).
Operator spectral_indicator(const Operator& x, const Interval& interval, bool of_modulus = false);

/// Generalized s-number mu_t(x) = inf{ s >= 0 : tau(1_(s,inf)(|x|)) <= t }.
double mu(const TracialAlgebra& algebra, const Operator& x, double t);
double mu(const Operator& x, double t);
/// Same quantile on an already computed weighted value list (descending).
double mu_from_values(std::span<const WeightedValue> values, double t);

bool is_projection(const Operator& p, double tol = 1e-8);

/// Projection onto the intersection of the ranges. Singular values of the
/// stacked complements below 1e-9 max(1, largest) count as zero.
Operator projection_meet(std::span<const Operator> projections);

}  // namespace nclil
