#pragma once

// Trace-preserving conditional expectations onto unital *-subalgebras of a
// TracialAlgebra, and filtrations built from them.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nclil/algebra.hpp"

namespace nclil {

/// Tensor-marginal subalgebra (F_1 (x) ... (x) F_level) (x) 1 of
/// F_1 (x) ... (x) F_N.
struct MarginalDescriptor {
  std::vector<AlgebraPtr> factors;
  std::size_t level = 0;
};

class Subalgebra {
 public:
  /// Subalgebra given by an orthonormal basis (w.r.t. hilbert_inner) of a
  /// unital *-closed multiplicatively closed subspace. Only shapes are
  /// checked here; use span_subalgebra to build one from generators.
  static Subalgebra from_basis(AlgebraPtr parent, std::vector<Operator> basis, std::string provenance);
  static Subalgebra scalars(AlgebraPtr parent);
  static Subalgebra whole(AlgebraPtr parent);
  static Subalgebra marginal(AlgebraPtr parent, MarginalDescriptor descriptor);
  /// S (x) M_2 inside A (x) M_2, where A is the parent of `inner`.
  static Subalgebra amplified(std::shared_ptr<const Subalgebra> inner, AlgebraPtr doubled_parent);

  const AlgebraPtr& parent() const { return parent_; }
  const std::string& provenance() const { return provenance_; }
  std::size_t dimension() const;
  bool has_fast_path() const { return marginal_.has_value() || inner_ != nullptr; }
  const std::optional<MarginalDescriptor>& marginal_descriptor() const { return marginal_; }

  /// Orthonormal basis; materialized on demand for marginal and amplified
  /// subalgebras.
  std::vector<Operator> basis() const;

  /// E(x). Uses the partial-trace path when available.
  Operator expect(const Operator& x) const;
  /// E(x) = sum_j b_j <b_j, x> over the materialized basis, regardless of
  /// any fast path.
  Operator expect_by_basis(const Operator& x) const;

 private:
  Subalgebra() = default;
  AlgebraPtr parent_;
  std::vector<Operator> basis_;
  std::optional<MarginalDescriptor> marginal_;
  std::shared_ptr<const Subalgebra> inner_;
  std::string provenance_;
};

/// Smallest unital *-subalgebra containing the generators (closure under
/// adjoints and products with Gram-Schmidt, rank tolerance 1e-9). Throws
/// std::runtime_error after 64 rounds without stabilizing.
Subalgebra span_subalgebra(const AlgebraPtr& algebra, std::span<const Operator> generators);

Operator cond_expect(const Subalgebra& sub, const Operator& x);

/// Increasing tower M_0 <= M_1 <= ... <= M_N.
class Filtration {
 public:
  /// Validates that M_0 is the scalars (unless `scalar_base` is false) and
  /// that each level is contained in the next (tolerance 1e-9). Throws
  /// std::invalid_argument otherwise.
  explicit Filtration(std::vector<Subalgebra> levels, bool nested_by_construction = false, bool scalar_base = true);

  const AlgebraPtr& algebra() const { return levels_.front().parent(); }
  /// N, the index of the top level.
  std::size_t depth() const { return levels_.size() - 1; }
  const Subalgebra& level(std::size_t k) const { return levels_.at(k); }
  const std::vector<Subalgebra>& levels() const { return levels_; }
  bool nested_by_construction() const { return nested_by_construction_; }

  Operator expect(std::size_t k, const Operator& x) const { return levels_.at(k).expect(x); }

 private:
  std::vector<Subalgebra> levels_;
  bool nested_by_construction_ = false;
};

struct TensorTower {
  AlgebraPtr algebra;
  std::vector<AlgebraPtr> factors;
  std::shared_ptr<const Filtration> filtration;
};

/// A = F_1 (x) ... (x) F_N with M_k = (F_1 (x) ... (x) F_k) (x) 1.
TensorTower tensor_filtration(std::vector<AlgebraPtr> factors, std::size_t dim_cap = 4096);
/// Convenience: factor i is M_{dims[i]} with weight 1.
TensorTower tensor_filtration(std::span<const int> factor_dims, std::size_t dim_cap = 4096);

struct TowerReport {
  double max_error = 0.0;      // max ||E_m E_n x - E_min x||_inf / max(||x||_inf, tiny)
  std::size_t worst_m = 0;
  std::size_t worst_n = 0;
  std::size_t samples = 0;
  bool passed = true;          // max_error <= 1e-9
};

TowerReport verify_tower(std::span<const Subalgebra> levels, std::size_t n_samples, std::uint64_t seed);
TowerReport verify_tower(const Filtration& filtration, std::size_t n_samples, std::uint64_t seed);

/// q = 1_[1-eta, 1](E(p)), a projection in `sub` with tau(1-q) <= tau(1-p)/eta.
Operator compress_projection(const Subalgebra& sub, const Operator& p, double eta);

}  // namespace nclil
