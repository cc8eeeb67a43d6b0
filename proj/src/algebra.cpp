#include "nclil/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nclil {

namespace {

constexpr double kSelfAdjointTol = 1e-10;
constexpr double kCutTol = 1e-12;
constexpr double kMeetRankTol = 1e-9;

double block_op_norm(const Matrix& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  if (m.rows() <= 16) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
  }
  // largest eigenvalue of m* m; relative accuracy is kept for the top value
  const Matrix g = m.adjoint() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

Eigen::VectorXd block_singular_values(const Matrix& m) {
  if (m.rows() == 1) return Eigen::VectorXd::Constant(1, std::abs(m(0, 0)));
  // diagonal blocks are read off exactly
  if (m.isDiagonal(0.0)) return m.diagonal().cwiseAbs();
  if (m.rows() <= 16) return Eigen::JacobiSVD<Matrix>(m).singularValues();
  return Eigen::BDCSVD<Matrix>(m).singularValues();
}

// Eigenvalues of a Hermitian block in descending order with matching vectors.
SpectrumBlock hermitian_block(const Matrix& m) {
  SpectrumBlock out;
  if (m.rows() == 1) {
    out.values = Eigen::VectorXd::Constant(1, m(0, 0).real());
    out.vectors = Matrix::Identity(1, 1);
    return out;
  }
  Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success) throw std::runtime_error("herm_spectrum: eigensolver failed");
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

double snap_tol(double c) { return kCutTol * std::max(1.0, std::abs(c)); }

}  // namespace

TracialAlgebra::TracialAlgebra(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw std::invalid_argument("TracialAlgebra: no blocks");
  double total = 0.0;
  for (const auto& b : blocks_) {
    if (b.dim <= 0) throw std::invalid_argument("TracialAlgebra: block dimension must be positive");
    if (!(b.weight > 0.0) || !std::isfinite(b.weight))
      throw std::invalid_argument("TracialAlgebra: block weight must be positive");
    total += b.weight;
    total_dim_ += static_cast<std::size_t>(b.dim);
    max_dim_ = std::max(max_dim_, b.dim);
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("TracialAlgebra: weights sum to " + std::to_string(total) + ", expected 1");
}

AlgebraPtr TracialAlgebra::make(std::vector<Block> blocks) {
  return std::make_shared<const TracialAlgebra>(std::move(blocks));
}

AlgebraPtr TracialAlgebra::matrix(int dim) { return make({Block{dim, 1.0}}); }

AlgebraPtr TracialAlgebra::atoms(std::span<const double> weights) {
  std::vector<Block> blocks;
  blocks.reserve(weights.size());
  for (double w : weights) blocks.push_back({1, w});
  return make(std::move(blocks));
}

AlgebraPtr TracialAlgebra::uniform_atoms(std::size_t count) {
  if (count == 0) throw std::invalid_argument("uniform_atoms: count must be positive");
  std::vector<double> w(count, 1.0 / static_cast<double>(count));
  // Push the rounding residue into the last atom so the weights sum to 1.
  double s = std::accumulate(w.begin(), w.end() - 1, 0.0);
  w.back() = 1.0 - s;
  return atoms(w);
}

std::size_t TracialAlgebra::linear_dim() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += static_cast<std::size_t>(b.dim) * static_cast<std::size_t>(b.dim);
  return n;
}

bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return *a == *b;
}

void require_same_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
  if (!same_algebra(a, b)) throw std::invalid_argument("operators belong to different algebras");
}

void require_member(const TracialAlgebra& algebra, const Operator& x) {
  if (!(*x.algebra() == algebra)) throw std::invalid_argument("operator does not belong to the algebra");
}

// ---------------------------------------------------------------------------

Operator::Operator(AlgebraPtr algebra, std::vector<Matrix> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  if (!algebra_) throw std::invalid_argument("Operator: null algebra");
  if (blocks_.size() != algebra_->num_blocks())
    throw std::invalid_argument("Operator: block count mismatch");
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const int d = algebra_->block(i).dim;
    if (blocks_[i].rows() != d || blocks_[i].cols() != d)
      throw std::invalid_argument("Operator: block " + std::to_string(i) + " has the wrong shape");
  }
}

Operator Operator::zero(AlgebraPtr algebra) {
  std::vector<Matrix> blocks;
  blocks.reserve(algebra->num_blocks());
  for (const auto& b : algebra->blocks()) blocks.push_back(Matrix::Zero(b.dim, b.dim));
  return Operator(std::move(algebra), std::move(blocks));
}

Operator Operator::identity(AlgebraPtr algebra) { return scalar(std::move(algebra), 1.0); }

Operator Operator::scalar(AlgebraPtr algebra, cplx value) {
  std::vector<Matrix> blocks;
  blocks.reserve(algebra->num_blocks());
  for (const auto& b : algebra->blocks()) blocks.push_back(value * Matrix::Identity(b.dim, b.dim));
  return Operator(std::move(algebra), std::move(blocks));
}

Operator Operator::diagonal(AlgebraPtr algebra, std::span<const double> entries) {
  if (entries.size() != algebra->total_dim())
    throw std::invalid_argument("Operator::diagonal: expected " + std::to_string(algebra->total_dim()) +
                                " entries");
  std::vector<Matrix> blocks;
  blocks.reserve(algebra->num_blocks());
  std::size_t pos = 0;
  for (const auto& b : algebra->blocks()) {
    Matrix m = Matrix::Zero(b.dim, b.dim);
    for (int j = 0; j < b.dim; ++j) m(j, j) = entries[pos++];
    blocks.push_back(std::move(m));
  }
  return Operator(std::move(algebra), std::move(blocks));
}

Operator Operator::adjoint() const {
  std::vector<Matrix> blocks;
  blocks.reserve(blocks_.size());
  for (const auto& b : blocks_) blocks.push_back(b.adjoint());
  return Operator(algebra_, std::move(blocks));
}

bool Operator::is_self_adjoint() const {
  double diff_frob2 = 0.0;
  double frob2 = 0.0;
  for (const auto& b : blocks_) {
    diff_frob2 += (b - b.adjoint()).squaredNorm();
    frob2 += b.squaredNorm();
  }
  const double diff_frob = std::sqrt(diff_frob2);
  // Frobenius bounds the operator norm from above, and ||x||_F / sqrt(n)
  // bounds it from below, so the cheap test is conservative.
  const double norm_lower = std::sqrt(frob2 / static_cast<double>(algebra_->total_dim()));
  if (diff_frob <= kSelfAdjointTol * std::max(1.0, norm_lower)) return true;
  double diff = 0.0;
  for (const auto& b : blocks_) diff = std::max(diff, block_op_norm(b - b.adjoint()));
  return diff <= kSelfAdjointTol * std::max(1.0, op_norm(*this));
}

Operator& Operator::operator+=(const Operator& other) {
  require_same_algebra(algebra_, other.algebra_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] += other.blocks_[i];
  return *this;
}

Operator& Operator::operator-=(const Operator& other) {
  require_same_algebra(algebra_, other.algebra_);
  for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i] -= other.blocks_[i];
  return *this;
}

Operator& Operator::operator*=(cplx s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_algebra(a.algebra(), b.algebra());
  std::vector<Matrix> blocks;
  blocks.reserve(a.num_blocks());
  for (std::size_t i = 0; i < a.num_blocks(); ++i) {
    if (a.block(i).rows() == 1)
      blocks.push_back(Matrix::Constant(1, 1, a.block(i)(0, 0) * b.block(i)(0, 0)));
    else
      blocks.push_back(a.block(i) * b.block(i));
  }
  return Operator(a.algebra(), std::move(blocks));
}

// ---------------------------------------------------------------------------

cplx trace(const TracialAlgebra& algebra, const Operator& x) {
  require_member(algebra, x);
  return trace(x);
}

cplx trace(const Operator& x) {
  const auto& alg = *x.algebra();
  cplx sum = 0.0;
  for (std::size_t i = 0; i < alg.num_blocks(); ++i)
    sum += alg.block(i).weight * x.block(i).trace() / static_cast<double>(alg.block(i).dim);
  return sum;
}

double real_trace(const Operator& x) {
  const cplx t = trace(x);
  if (std::abs(t.imag()) > 1e-10 * std::max(1.0, std::abs(t)))
    throw std::domain_error("real_trace: trace has a non-negligible imaginary part");
  return t.real();
}

cplx hilbert_inner(const TracialAlgebra& algebra, const Operator& x, const Operator& y) {
  require_member(algebra, x);
  require_member(algebra, y);
  return hilbert_inner(x, y);
}

cplx hilbert_inner(const Operator& x, const Operator& y) {
  require_same_algebra(x.algebra(), y.algebra());
  const auto& alg = *x.algebra();
  cplx sum = 0.0;
  for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
    // tr(x* y) = sum_{rc} conj(x_rc) y_rc
    const cplx t = (x.block(i).conjugate().cwiseProduct(y.block(i))).sum();
    sum += alg.block(i).weight * t / static_cast<double>(alg.block(i).dim);
  }
  return sum;
}

std::vector<WeightedValue> singular_values(const Operator& x) {
  const auto& alg = *x.algebra();
  std::vector<WeightedValue> out;
  out.reserve(alg.total_dim());
  for (std::size_t i = 0; i < alg.num_blocks(); ++i) {
    const double w = alg.block(i).weight / static_cast<double>(alg.block(i).dim);
    const Eigen::VectorXd sv = block_singular_values(x.block(i));
    for (Eigen::Index j = 0; j < sv.size(); ++j) out.push_back({sv(j), w, 1});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WeightedValue& a, const WeightedValue& b) { return a.value > b.value; });
  return out;
}

double lp_norm(const TracialAlgebra& algebra, const Operator& x, double p) {
  require_member(algebra, x);
  return lp_norm(x, p);
}

double lp_norm(const Operator& x, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (std::isinf(p)) return op_norm(x);
  if (p == 2.0) return std::sqrt(std::max(0.0, hilbert_inner(x, x).real()));
  double sum = 0.0;
  for (const auto& v : singular_values(x)) sum += v.weight * v.multiplicity * std::pow(v.value, p);
  return std::pow(sum, 1.0 / p);
}

double op_norm(const Operator& x) {
  double n = 0.0;
  for (const auto& b : x.blocks()) n = std::max(n, block_op_norm(b));
  return n;
}

double frobenius_norm(const Operator& x) {
  double s = 0.0;
  for (const auto& b : x.blocks()) s += b.squaredNorm();
  return std::sqrt(s);
}

double commutator_norm(const Operator& x, const Operator& y) {
  require_same_algebra(x.algebra(), y.algebra());
  double n = 0.0;
  for (std::size_t i = 0; i < x.num_blocks(); ++i) {
    if (x.block(i).rows() == 1) continue;
    n = std::max(n, block_op_norm(x.block(i) * y.block(i) - y.block(i) * x.block(i)));
  }
  return n;
}

// ---------------------------------------------------------------------------

Spectrum::Spectrum(AlgebraPtr algebra, std::vector<SpectrumBlock> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {}

std::vector<WeightedValue> Spectrum::weighted() const {
  std::vector<WeightedValue> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& b = algebra_->block(i);
    const double w = b.weight / static_cast<double>(b.dim);
    const auto& vals = blocks_[i].values;
    Eigen::Index j = 0;
    while (j < vals.size()) {
      Eigen::Index k = j + 1;
      while (k < vals.size() && std::abs(vals(k) - vals(j)) <= 1e-12 * std::max(1.0, std::abs(vals(j)))) ++k;
      out.push_back({vals(j), w, static_cast<int>(k - j)});
      j = k;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const WeightedValue& a, const WeightedValue& b) { return a.value > b.value; });
  return out;
}

double Spectrum::max() const {
  double m = -kInf;
  for (const auto& b : blocks_) m = std::max(m, b.values(0));
  return m;
}

double Spectrum::min() const {
  double m = kInf;
  for (const auto& b : blocks_) m = std::min(m, b.values(b.values.size() - 1));
  return m;
}

Operator Spectrum::reconstruct() const {
  return apply_function(*this, [](double v) { return v; });
}

Spectrum herm_spectrum(const Operator& x) {
  if (!x.is_self_adjoint()) throw std::invalid_argument("herm_spectrum: operator is not self-adjoint");
  std::vector<SpectrumBlock> blocks;
  blocks.reserve(x.num_blocks());
  for (const auto& b : x.blocks()) blocks.push_back(hermitian_block(b));
  return Spectrum(x.algebra(), std::move(blocks));
}

Operator apply_function(const Spectrum& spectrum, const std::function<double(double)>& f) {
  std::vector<Matrix> out;
  out.reserve(spectrum.blocks().size());
  for (const auto& b : spectrum.blocks()) {
    Eigen::VectorXd fv(b.values.size());
    for (Eigen::Index j = 0; j < b.values.size(); ++j) {
      fv(j) = f(b.values(j));
      if (!std::isfinite(fv(j))) throw std::domain_error("apply_function: f is not finite on the spectrum");
    }
    if (b.values.size() == 1) {
      out.push_back(Matrix::Constant(1, 1, fv(0) * std::norm(b.vectors(0, 0))));
    } else {
      out.push_back(b.vectors * fv.cast<cplx>().asDiagonal() * b.vectors.adjoint());
    }
  }
  return Operator(spectrum.algebra(), std::move(out));
}

Operator exp_herm(const Operator& x) {
  return apply_function(herm_spectrum(x), [](double v) { return std::exp(v); });
}

bool Interval::contains(double v) const {
  if (std::isfinite(lo) && std::abs(v - lo) <= snap_tol(lo)) return lo_closed;
  if (std::isfinite(hi) && std::abs(v - hi) <= snap_tol(hi)) return hi_closed;
  return v > lo && v < hi;
}

Operator spectral_indicator(const Operator& x, const Interval& interval, bool of_modulus) {
  const bool sa = x.is_self_adjoint();
  if (!of_modulus && !sa) throw std::invalid_argument("spectral_indicator: operator is not self-adjoint");
  if (sa) {
    const Spectrum spec = herm_spectrum(x);
    return apply_function(spec, [&](double v) { return interval.contains(of_modulus ? std::abs(v) : v) ? 1.0 : 0.0; });
  }
  // |x| = V S V* from x = U S V*.
  std::vector<Matrix> out;
  out.reserve(x.num_blocks());
  for (const auto& b : x.blocks()) {
    if (b.rows() == 1) {
      out.push_back(Matrix::Constant(1, 1, interval.contains(std::abs(b(0, 0))) ? 1.0 : 0.0));
      continue;
    }
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const Matrix& v = svd.matrixV();
    Eigen::VectorXd ind(s.size());
    for (Eigen::Index j = 0; j < s.size(); ++j) ind(j) = interval.contains(s(j)) ? 1.0 : 0.0;
    out.push_back(v * ind.cast<cplx>().asDiagonal() * v.adjoint());
  }
  return Operator(x.algebra(), std::move(out));
}

double mu_from_values(std::span<const WeightedValue> values, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("mu: t must lie in (0, 1)");
  // values are sorted descending; accumulate the trace mass strictly above
  // each candidate level and stop at the first level whose mass exceeds t.
  double mass = 0.0;
  std::size_t i = 0;
  while (i < values.size()) {
    const double level = values[i].value;
    double group = 0.0;
    std::size_t j = i;
    while (j < values.size() && values[j].value == level) {
      group += values[j].weight * values[j].multiplicity;
      ++j;
    }
    // For s in [next level, level) the mass above s is mass + group.
    if (mass + group > t * (1.0 + 1e-12)) return level;
    mass += group;
    i = j;
  }
  return 0.0;
}

double mu(const TracialAlgebra& algebra, const Operator& x, double t) {
  require_member(algebra, x);
  return mu(x, t);
}

double mu(const Operator& x, double t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("mu: t must lie in (0, 1)");
  const auto sv = singular_values(x);
  return mu_from_values(sv, t);
}

bool is_projection(const Operator& p, double tol) {
  for (const auto& b : p.blocks()) {
    const double scale = std::max(1.0, b.norm());
    if ((b - b.adjoint()).norm() > tol * scale) return false;
    if ((b * b - b).norm() > tol * scale) return false;
  }
  return true;
}

Operator projection_meet(std::span<const Operator> projections) {
  if (projections.empty()) throw std::invalid_argument("projection_meet: empty list");
  const AlgebraPtr& alg = projections.front().algebra();
  for (const auto& p : projections) {
    require_same_algebra(alg, p.algebra());
    if (!is_projection(p)) throw std::invalid_argument("projection_meet: input is not a projection");
  }
  std::vector<Matrix> out;
  out.reserve(alg->num_blocks());
  const auto k = static_cast<Eigen::Index>(projections.size());
  for (std::size_t i = 0; i < alg->num_blocks(); ++i) {
    const int d = alg->block(i).dim;
    if (d == 1) {
      bool all = true;
      for (const auto& p : projections) all = all && std::abs(p.block(i)(0, 0)) > 0.5;
      out.push_back(Matrix::Constant(1, 1, all ? 1.0 : 0.0));
      continue;
    }
    // Range intersection = common kernel of the complements 1 - p_j.
    Matrix stacked(k * d, d);
    for (Eigen::Index j = 0; j < k; ++j)
      stacked.block(j * d, 0, d, d) = Matrix::Identity(d, d) - projections[static_cast<std::size_t>(j)].block(i);
    Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    // complements are projections, so the scale is at least 1
    const double cutoff = kMeetRankTol * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    Matrix e = Matrix::Zero(d, d);
    const Matrix& v = svd.matrixV();
    for (Eigen::Index c = 0; c < d; ++c) {
      const double sv = c < s.size() ? s(c) : 0.0;
      if (sv <= cutoff) e += v.col(c) * v.col(c).adjoint();
    }
    out.push_back(std::move(e));
  }
  return Operator(alg, std::move(out));
}

}  // namespace nclil
