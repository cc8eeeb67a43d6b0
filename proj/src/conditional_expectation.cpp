#include "nclil/conditional_expectation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nclil/random.hpp"
#include "nclil/tensor.hpp"

namespace nclil {

namespace {

constexpr double kRankTol = 1e-9;
constexpr double kNestTol = 1e-9;
constexpr int kMaxClosureRounds = 64;

struct MarginalLayout {
  std::size_t n_prefix = 1;          // number of prefix blocks
  std::size_t n_tail = 1;            // number of tail blocks
  std::vector<int> prefix_dims;      // D_P
  std::vector<int> tail_dims;        // d_T
};

MarginalLayout layout_of(const MarginalDescriptor& d) {
  MarginalLayout out;
  out.prefix_dims = {1};
  out.tail_dims = {1};
  for (std::size_t i = 0; i < d.factors.size(); ++i) {
    auto& dims = i < d.level ? out.prefix_dims : out.tail_dims;
    std::vector<int> next;
    next.reserve(dims.size() * d.factors[i]->num_blocks());
    for (int a : dims)
      for (const auto& b : d.factors[i]->blocks()) next.push_back(a * b.dim);
    dims = std::move(next);
  }
  out.n_prefix = out.prefix_dims.size();
  out.n_tail = out.tail_dims.size();
  return out;
}

Operator marginal_expect(const AlgebraPtr& parent, const MarginalDescriptor& desc, const Operator& x) {
  const MarginalLayout lay = layout_of(desc);
  std::vector<Matrix> out(parent->num_blocks());
  for (std::size_t p = 0; p < lay.n_prefix; ++p) {
    const int dp = lay.prefix_dims[p];
    double wp = 0.0;
    for (std::size_t t = 0; t < lay.n_tail; ++t) wp += parent->block(p * lay.n_tail + t).weight;
    Matrix a = Matrix::Zero(dp, dp);
    for (std::size_t t = 0; t < lay.n_tail; ++t) {
      const std::size_t idx = p * lay.n_tail + t;
      const int dt = lay.tail_dims[t];
      const Matrix& xb = x.block(idx);
      const double scale = parent->block(idx).weight / (wp * dt);
      if (dt == 1) {
        a += scale * xb;
        continue;
      }
      for (int r = 0; r < dp; ++r)
        for (int c = 0; c < dp; ++c) {
          cplx s = 0.0;
          for (int k = 0; k < dt; ++k) s += xb(r * dt + k, c * dt + k);
          a(r, c) += scale * s;
        }
    }
    for (std::size_t t = 0; t < lay.n_tail; ++t) {
      const int dt = lay.tail_dims[t];
      out[p * lay.n_tail + t] = dt == 1 ? a : kron(a, Matrix::Identity(dt, dt));
    }
  }
  return Operator(parent, std::move(out));
}

std::vector<Operator> marginal_basis(const AlgebraPtr& parent, const MarginalDescriptor& desc) {
  const MarginalLayout lay = layout_of(desc);
  std::vector<Operator> basis;
  for (std::size_t p = 0; p < lay.n_prefix; ++p) {
    const int dp = lay.prefix_dims[p];
    double wp = 0.0;
    for (std::size_t t = 0; t < lay.n_tail; ++t) wp += parent->block(p * lay.n_tail + t).weight;
    const double scale = std::sqrt(dp / wp);
    for (int r = 0; r < dp; ++r)
      for (int c = 0; c < dp; ++c) {
        Operator b = Operator::zero(parent);
        std::vector<Matrix> blocks = b.blocks();
        Matrix unit = Matrix::Zero(dp, dp);
        unit(r, c) = scale;
        for (std::size_t t = 0; t < lay.n_tail; ++t) {
          const int dt = lay.tail_dims[t];
          blocks[p * lay.n_tail + t] = kron(unit, Matrix::Identity(dt, dt));
        }
        basis.emplace_back(parent, std::move(blocks));
      }
  }
  return basis;
}

// Splits a block of A (x) M_2 into its four d x d corners (M_2 outer).
std::vector<Operator> corners(const AlgebraPtr& inner_parent, const Operator& x) {
  std::vector<Operator> out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      std::vector<Matrix> blocks;
      blocks.reserve(x.num_blocks());
      for (std::size_t i = 0; i < x.num_blocks(); ++i) {
        const int d = inner_parent->block(i).dim;
        blocks.push_back(x.block(i).block(a * d, b * d, d, d));
      }
      out.emplace_back(inner_parent, std::move(blocks));
    }
  return out;
}

Operator assemble(const AlgebraPtr& doubled, const std::vector<Operator>& parts) {
  std::vector<Matrix> blocks;
  blocks.reserve(doubled->num_blocks());
  for (std::size_t i = 0; i < doubled->num_blocks(); ++i) {
    const int d = doubled->block(i).dim / 2;
    Matrix m(2 * d, 2 * d);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) m.block(a * d, b * d, d, d) = parts[static_cast<std::size_t>(2 * a + b)].block(i);
    blocks.push_back(std::move(m));
  }
  return Operator(doubled, std::move(blocks));
}

// Gram-Schmidt state for span_subalgebra.
class BasisBuilder {
 public:
  explicit BasisBuilder(AlgebraPtr parent) : parent_(std::move(parent)) {}

  bool try_add(const Operator& candidate) {
    const double norm0 = std::sqrt(std::max(0.0, hilbert_inner(candidate, candidate).real()));
    if (norm0 == 0.0) return false;
    Operator v = candidate;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis_) v -= b * hilbert_inner(b, v);
    const double norm = std::sqrt(std::max(0.0, hilbert_inner(v, v).real()));
    if (norm <= kRankTol * norm0) return false;
    basis_.push_back(v * (1.0 / norm));
    return true;
  }

  std::vector<Operator>& basis() { return basis_; }

 private:
  AlgebraPtr parent_;
  std::vector<Operator> basis_;
};

}  // namespace

// ---------------------------------------------------------------------------

Subalgebra Subalgebra::from_basis(AlgebraPtr parent, std::vector<Operator> basis, std::string provenance) {
  for (const auto& b : basis) require_same_algebra(parent, b.algebra());
  Subalgebra s;
  s.parent_ = std::move(parent);
  s.basis_ = std::move(basis);
  s.provenance_ = std::move(provenance);
  return s;
}

Subalgebra Subalgebra::scalars(AlgebraPtr parent) {
  Operator one = Operator::identity(parent);
  return from_basis(std::move(parent), {std::move(one)}, "scalars");
}

Subalgebra Subalgebra::whole(AlgebraPtr parent) {
  MarginalDescriptor d{{parent}, 1};
  return marginal(std::move(parent), std::move(d));
}

Subalgebra Subalgebra::marginal(AlgebraPtr parent, MarginalDescriptor descriptor) {
  if (descriptor.level > descriptor.factors.size())
    throw std::invalid_argument("Subalgebra::marginal: level exceeds factor count");
  Subalgebra s;
  s.provenance_ = "tensor marginal of first " + std::to_string(descriptor.level) + " of " +
                  std::to_string(descriptor.factors.size()) + " factors";
  s.parent_ = std::move(parent);
  s.marginal_ = std::move(descriptor);
  return s;
}

Subalgebra Subalgebra::amplified(std::shared_ptr<const Subalgebra> inner, AlgebraPtr doubled_parent) {
  const auto& ip = inner->parent();
  if (doubled_parent->num_blocks() != ip->num_blocks())
    throw std::invalid_argument("Subalgebra::amplified: block count mismatch");
  for (std::size_t i = 0; i < ip->num_blocks(); ++i)
    if (doubled_parent->block(i).dim != 2 * ip->block(i).dim)
      throw std::invalid_argument("Subalgebra::amplified: doubled parent must have doubled blocks");
  Subalgebra s;
  s.provenance_ = "(" + inner->provenance() + ") (x) M_2";
  s.parent_ = std::move(doubled_parent);
  s.inner_ = std::move(inner);
  return s;
}

std::size_t Subalgebra::dimension() const {
  if (marginal_) {
    const MarginalLayout lay = layout_of(*marginal_);
    std::size_t n = 0;
    for (int d : lay.prefix_dims) n += static_cast<std::size_t>(d) * static_cast<std::size_t>(d);
    return n;
  }
  if (inner_) return 4 * inner_->dimension();
  return basis_.size();
}

std::vector<Operator> Subalgebra::basis() const {
  if (marginal_) return marginal_basis(parent_, *marginal_);
  if (inner_) {
    std::vector<Operator> out;
    const AlgebraPtr& ip = inner_->parent();
    for (const auto& b : inner_->basis()) {
      for (int slot = 0; slot < 4; ++slot) {
        std::vector<Operator> parts(4, Operator::zero(ip));
        parts[static_cast<std::size_t>(slot)] = b * std::sqrt(2.0);
        out.push_back(assemble(parent_, parts));
      }
    }
    return out;
  }
  return basis_;
}

Operator Subalgebra::expect(const Operator& x) const {
  require_same_algebra(parent_, x.algebra());
  if (marginal_) return marginal_expect(parent_, *marginal_, x);
  if (inner_) {
    auto parts = corners(inner_->parent(), x);
    for (auto& p : parts) p = inner_->expect(p);
    return assemble(parent_, parts);
  }
  return expect_by_basis(x);
}

Operator Subalgebra::expect_by_basis(const Operator& x) const {
  require_same_algebra(parent_, x.algebra());
  const std::vector<Operator> owned = (marginal_ || inner_) ? basis() : std::vector<Operator>{};
  const std::vector<Operator>& b = (marginal_ || inner_) ? owned : basis_;
  Operator out = Operator::zero(parent_);
  for (const auto& e : b) out += e * hilbert_inner(e, x);
  return out;
}

Subalgebra span_subalgebra(const AlgebraPtr& algebra, std::span<const Operator> generators) {
  BasisBuilder builder(algebra);
  builder.try_add(Operator::identity(algebra));
  for (const auto& g : generators) {
    require_same_algebra(algebra, g.algebra());
    builder.try_add(g);
    builder.try_add(g.adjoint());
  }
  std::size_t fresh = 0;  // basis elements [fresh, size) are new this round
  for (int round = 0;; ++round) {
    if (round >= kMaxClosureRounds)
      throw std::runtime_error("span_subalgebra: closure did not stabilize within 64 rounds");
    const std::size_t size = builder.basis().size();
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t j = 0; j < size; ++j) {
        if (i < fresh && j < fresh) continue;
        const Operator prod = builder.basis()[i] * builder.basis()[j];
        builder.try_add(prod);
      }
      if (i >= fresh) builder.try_add(builder.basis()[i].adjoint());
    }
    if (builder.basis().size() == size) break;
    fresh = size;
  }
  return Subalgebra::from_basis(algebra, std::move(builder.basis()), "generated by " +
                                                                         std::to_string(generators.size()) +
                                                                         " operator(s)");
}

Operator cond_expect(const Subalgebra& sub, const Operator& x) { return sub.expect(x); }

// ---------------------------------------------------------------------------

Filtration::Filtration(std::vector<Subalgebra> levels, bool nested_by_construction, bool scalar_base)
    : levels_(std::move(levels)), nested_by_construction_(nested_by_construction) {
  if (levels_.empty()) throw std::invalid_argument("Filtration: no levels");
  const AlgebraPtr& alg = levels_.front().parent();
  for (const auto& l : levels_) require_same_algebra(alg, l.parent());
  if (scalar_base && levels_.front().dimension() != 1)
    throw std::invalid_argument("Filtration: M_0 must be the scalars");
  if (nested_by_construction) return;
  for (std::size_t k = 0; k + 1 < levels_.size(); ++k) {
    for (const auto& b : levels_[k].basis()) {
      const Operator r = levels_[k + 1].expect(b) - b;
      const double err = std::sqrt(std::max(0.0, hilbert_inner(r, r).real()));
      if (err > kNestTol)
        throw std::invalid_argument("Filtration: level " + std::to_string(k) + " is not contained in level " +
                                    std::to_string(k + 1));
    }
  }
}

TensorTower tensor_filtration(std::vector<AlgebraPtr> factors, std::size_t dim_cap) {
  if (factors.empty()) throw std::invalid_argument("tensor_filtration: need at least one factor");
  // Cap on the block-diagonal size as well as on individual blocks.
  std::size_t total = 1;
  for (const auto& f : factors) {
    total *= f->total_dim();
    if (total > dim_cap)
      throw std::invalid_argument("tensor_filtration: total dimension exceeds cap " + std::to_string(dim_cap));
  }
  AlgebraPtr product = tensor_algebra(factors, dim_cap);
  std::vector<Subalgebra> levels;
  levels.reserve(factors.size() + 1);
  for (std::size_t k = 0; k <= factors.size(); ++k)
    levels.push_back(Subalgebra::marginal(product, MarginalDescriptor{factors, k}));
  auto filt = std::make_shared<const Filtration>(std::move(levels), true);
  return TensorTower{product, std::move(factors), std::move(filt)};
}

TensorTower tensor_filtration(std::span<const int> factor_dims, std::size_t dim_cap) {
  std::vector<AlgebraPtr> factors;
  factors.reserve(factor_dims.size());
  for (int d : factor_dims) factors.push_back(TracialAlgebra::matrix(d));
  return tensor_filtration(std::move(factors), dim_cap);
}

TowerReport verify_tower(std::span<const Subalgebra> levels, std::size_t n_samples, std::uint64_t seed) {
  TowerReport report;
  if (levels.empty()) return report;
  const AlgebraPtr& alg = levels.front().parent();
  Rng rng(seed);
  const std::size_t n = levels.size();
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Operator x = random_operator(alg, rng);
    const double scale = std::max(op_norm(x), 1e-300);
    std::vector<Operator> single;
    single.reserve(n);
    for (const auto& l : levels) single.push_back(l.expect(x));
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t k = 0; k < n; ++k) {
        Operator diff = levels[m].expect(single[k]);
        diff -= single[std::min(m, k)];
        // the largest block Frobenius norm bounds the operator norm, so the
        // exact norm is only needed when the bound could raise the maximum
        double bound = 0.0;
        for (const auto& b : diff.blocks()) bound = std::max(bound, b.norm());
        if (bound / scale <= report.max_error) continue;
        const double err = op_norm(diff) / scale;
        if (err > report.max_error) {
          report.max_error = err;
          report.worst_m = m;
          report.worst_n = k;
        }
      }
    ++report.samples;
  }
  report.passed = report.max_error <= 1e-9;
  return report;
}

TowerReport verify_tower(const Filtration& filtration, std::size_t n_samples, std::uint64_t seed) {
  return verify_tower(filtration.levels(), n_samples, seed);
}

Operator compress_projection(const Subalgebra& sub, const Operator& p, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("compress_projection: eta must lie in (0, 1)");
  if (!is_projection(p)) throw std::invalid_argument("compress_projection: input is not a projection");
  const Operator pe = sub.expect(p);
  return spectral_indicator(pe, Interval::closed(1.0 - eta, 1.0));
}

}  // namespace nclil
