#include "nclil/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

#include "nclil/tensor.hpp"

namespace nclil {

double iterated_log(double x) {
  if (std::isnan(x) || x < 0.0) throw std::invalid_argument("iterated_log: negative input");
  if (x <= 1.0) return 1.0;
  const double ll = std::log(std::log(x));
  return std::max(1.0, ll);
}

// ---------------------------------------------------------------------------

Martingale::Martingale(std::shared_ptr<const Filtration> filtration, std::vector<Operator> values, bool validate)
    : filtration_(std::move(filtration)), values_(std::move(values)) {
  if (!filtration_) throw std::invalid_argument("Martingale: null filtration");
  if (values_.empty()) throw std::invalid_argument("Martingale: need x_0");
  if (values_.size() - 1 > filtration_->depth())
    throw std::invalid_argument("Martingale: more steps than filtration levels");
  for (const auto& v : values_) require_same_algebra(filtration_->algebra(), v.algebra());
  if (op_norm(values_.front()) > 1e-12) throw std::invalid_argument("Martingale: x_0 must be 0");
  diffs_.reserve(values_.size() - 1);
  for (std::size_t k = 1; k < values_.size(); ++k) diffs_.push_back(values_[k] - values_[k - 1]);
  self_adjoint_ = std::all_of(values_.begin(), values_.end(), [](const Operator& v) { return v.is_self_adjoint(); });
  if (validate) {
    const MartingaleCheck c = check();
    if (!c.ok())
      throw std::invalid_argument("Martingale: not an adapted martingale (adapted error " +
                                  std::to_string(c.adapted_error) + ", martingale error " +
                                  std::to_string(c.martingale_error) + ")");
  }
}

Martingale Martingale::from_differences(std::shared_ptr<const Filtration> filtration, std::vector<Operator> diffs,
                                        bool validate) {
  if (!filtration) throw std::invalid_argument("Martingale: null filtration");
  std::vector<Operator> values;
  values.reserve(diffs.size() + 1);
  values.push_back(Operator::zero(filtration->algebra()));
  for (auto& d : diffs) values.push_back(values.back() + d);
  return Martingale(std::move(filtration), std::move(values), validate);
}

MartingaleCheck Martingale::check() const {
  MartingaleCheck c;
  for (std::size_t k = 1; k < values_.size(); ++k) {
    const double scale = std::max(1.0, op_norm(values_[k]));
    c.adapted_error = std::max(c.adapted_error, op_norm(filtration_->expect(k, values_[k]) - values_[k]) / scale);
    c.martingale_error =
        std::max(c.martingale_error, op_norm(filtration_->expect(k - 1, values_[k]) - values_[k - 1]) / scale);
  }
  return c;
}

// ---------------------------------------------------------------------------

ScaleTrack bracket(const Martingale& m) {
  ScaleTrack s;
  const std::size_t n = m.steps();
  for (auto* v : {&s.col, &s.row, &s.s2, &s.t2, &s.u, &s.v}) v->reserve(n + 1);
  Operator col = Operator::zero(m.algebra());
  Operator row = Operator::zero(m.algebra());
  auto record = [&](double c, double r) {
    s.col.push_back(c);
    s.row.push_back(r);
    s.s2.push_back(c);
    s.t2.push_back(std::max(c, r));
    s.u.push_back(log_scale(c));
    s.v.push_back(log_scale(std::max(c, r)));
  };
  record(0.0, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const Operator& d = m.d(k);
    const Operator dstar = d.adjoint();
    col += m.filtration().expect(k - 1, dstar * d);
    if (!m.self_adjoint()) row += m.filtration().expect(k - 1, d * dstar);
    const double c = op_norm(col);
    record(c, m.self_adjoint() ? c : op_norm(row));
  }
  return s;
}

Operator bracket_operator(const Martingale& m, std::size_t n) {
  if (n > m.steps()) throw std::invalid_argument("bracket_operator: n exceeds steps");
  Operator col = Operator::zero(m.algebra());
  for (std::size_t k = 1; k <= n; ++k) col += m.filtration().expect(k - 1, m.d(k).adjoint() * m.d(k));
  return col;
}

AlgebraPtr doubled_algebra(const AlgebraPtr& algebra) {
  std::vector<Block> blocks = algebra->blocks();
  for (auto& b : blocks) b.dim *= 2;
  return TracialAlgebra::make(std::move(blocks));
}

Operator dilate_operator(const AlgebraPtr& doubled, const Operator& x) {
  std::vector<Matrix> blocks;
  blocks.reserve(x.num_blocks());
  for (const auto& b : x.blocks()) {
    const Eigen::Index d = b.rows();
    Matrix m = Matrix::Zero(2 * d, 2 * d);
    m.topRightCorner(d, d) = b;
    m.bottomLeftCorner(d, d) = b.adjoint();
    blocks.push_back(std::move(m));
  }
  return Operator(doubled, std::move(blocks));
}

Martingale dilate(const Martingale& m) {
  const AlgebraPtr doubled = doubled_algebra(m.algebra());
  std::vector<Subalgebra> levels;
  levels.reserve(m.filtration().depth() + 1);
  for (const auto& l : m.filtration().levels())
    levels.push_back(Subalgebra::amplified(std::make_shared<const Subalgebra>(l), doubled));
  // Amplification preserves inclusions, and M_0 (x) M_2 is M_2.
  auto filt = std::make_shared<const Filtration>(std::move(levels), true, false);
  std::vector<Operator> values;
  values.reserve(m.values().size());
  for (const auto& x : m.values()) values.push_back(dilate_operator(doubled, x));
  return Martingale(std::move(filt), std::move(values), true);
}

TruncationParts truncate_center(const Operator& d, double cutoff, const Filtration& filtration, std::size_t level) {
  if (!d.is_self_adjoint()) throw std::invalid_argument("truncate_center: operator is not self-adjoint");
  if (!(cutoff >= 0.0)) throw std::invalid_argument("truncate_center: cutoff must be nonnegative");
  if (level == 0 || level > filtration.depth()) throw std::invalid_argument("truncate_center: level out of range");
  const Spectrum spec = herm_spectrum(d);
  const Interval keep = Interval::closed(0.0, cutoff);
  const Operator lo = apply_function(spec, [&](double v) { return keep.contains(std::abs(v)) ? v : 0.0; });
  const Operator hi = apply_function(spec, [&](double v) { return keep.contains(std::abs(v)) ? 0.0 : v; });
  return {lo - filtration.expect(level - 1, lo), hi - filtration.expect(level - 1, hi)};
}

HwParts hw_split(const Operator& y, std::size_t k, double e) {
  if (k == 0) throw std::invalid_argument("hw_split: k must be >= 1");
  if (!(e > 0.0)) throw std::invalid_argument("hw_split: e must be positive");
  if (!y.is_self_adjoint()) throw std::invalid_argument("hw_split: operator is not self-adjoint");
  const double ny = op_norm(y);
  if (std::abs(trace(y)) > 1e-10 * std::max(1.0, ny)) throw std::invalid_argument("hw_split: tau(y) is not 0");
  const double kk = static_cast<double>(k);
  const double c1 = e * std::sqrt(kk) / (2.0 * log_scale(kk));
  const double c2 = std::sqrt(kk);
  const Interval small = Interval::closed(0.0, c1);
  const Interval mid = Interval::left_open(c1, c2);
  const Spectrum spec = herm_spectrum(y);
  // Every eigenvalue lands in exactly one part.
  auto part = [&](int which) {
    return apply_function(spec, [&, which](double v) {
      const double a = std::abs(v);
      const int at = small.contains(a) ? 0 : (c1 < c2 && mid.contains(a)) ? 1 : 2;
      return at == which ? v : 0.0;
    });
  };
  auto center = [](const Operator& a) { return a - Operator::scalar(a.algebra(), trace(a)); };
  Operator lo = part(0), md = part(1), hi = part(2);
  Operator yp = center(lo), z = center(md), w = center(hi);
  return HwParts{c1, c2, std::move(lo), std::move(md), std::move(hi), std::move(yp), std::move(z), std::move(w)};
}

// ---------------------------------------------------------------------------

Martingale gen_dyadic_rademacher(std::size_t steps, std::uint64_t seed) {
  if (steps == 0 || steps > 12) throw std::invalid_argument("gen_dyadic_rademacher: need 1 <= N <= 12");
  std::vector<AlgebraPtr> factors(steps, TracialAlgebra::uniform_atoms(2));
  const TensorTower tower = tensor_filtration(factors);
  Rng rng(seed);
  std::vector<Operator> diffs;
  diffs.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = (rng() & 1u) ? 1.0 : -1.0;
    const std::vector<double> signs{s, -s};
    diffs.push_back(embed_factor(tower.algebra, tower.factors, k, Operator::diagonal(factors[k], signs)));
  }
  return Martingale::from_differences(tower.filtration, std::move(diffs));
}

Martingale gen_sampled_rademacher(std::size_t steps, std::size_t atoms, std::uint64_t seed) {
  if (steps == 0 || atoms == 0) throw std::invalid_argument("gen_sampled_rademacher: need N, atoms >= 1");
  if (atoms > 256 || steps > 64) throw std::invalid_argument("gen_sampled_rademacher: size cap is 256 atoms x 64 steps");
  AlgebraPtr alg = TracialAlgebra::uniform_atoms(atoms);
  Rng rng(seed);
  std::vector<std::vector<double>> signs(steps, std::vector<double>(atoms));
  for (std::size_t a = 0; a < atoms; ++a)
    for (std::size_t k = 0; k < steps; ++k) signs[k][a] = (rng() & 1u) ? 1.0 : -1.0;

  // M_k: functions of the first k signs, i.e. indicators of prefix classes.
  std::vector<Subalgebra> levels;
  std::vector<std::uint64_t> prefix(atoms, 0);
  for (std::size_t k = 0; k <= steps; ++k) {
    if (k > 0)
      for (std::size_t a = 0; a < atoms; ++a) prefix[a] = prefix[a] * 2 + (signs[k - 1][a] > 0 ? 1 : 0);
    std::map<std::uint64_t, std::vector<std::size_t>> classes;
    for (std::size_t a = 0; a < atoms; ++a) classes[prefix[a]].push_back(a);
    std::vector<Operator> basis;
    for (const auto& [key, members] : classes) {
      std::vector<double> ind(atoms, 0.0);
      const double norm = std::sqrt(static_cast<double>(atoms) / static_cast<double>(members.size()));
      for (std::size_t a : members) ind[a] = norm;
      basis.push_back(Operator::diagonal(alg, ind));
    }
    levels.push_back(Subalgebra::from_basis(alg, std::move(basis), "sign prefixes of length " + std::to_string(k)));
  }
  auto filt = std::make_shared<const Filtration>(std::move(levels), true);
  std::vector<Operator> diffs;
  diffs.reserve(steps);
  for (const auto& s : signs) diffs.push_back(Operator::diagonal(alg, s));
  return Martingale::from_differences(std::move(filt), std::move(diffs), false);
}

RademacherEnsemble::RademacherEnsemble(std::size_t atoms, std::uint64_t seed) : rng_(seed), sums_(atoms, 0) {
  if (atoms == 0) throw std::invalid_argument("RademacherEnsemble: need atoms >= 1");
}

void RademacherEnsemble::step() {
  const std::size_t n = sums_.size();
  for (std::size_t base = 0; base < n; base += 64) {
    std::uint64_t bits = rng_();
    const std::size_t end = std::min(n, base + 64);
    for (std::size_t a = base; a < end; ++a, bits >>= 1) sums_[a] += (bits & 1u) ? 1 : -1;
  }
  ++time_;
}

// ---------------------------------------------------------------------------

namespace {

Matrix haar_unitary(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

std::vector<double> alternating_signs(int d) {
  std::vector<double> s(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) s[static_cast<std::size_t>(i)] = (i % 2 == 0) ? 1.0 : -1.0;
  return s;
}

// Traceless h of operator norm 1 in the factor algebra.
Operator draw_factor(const AlgebraPtr& factor, const TensorHermitianOptions& o, Rng& rng) {
  const int d = o.factor_dim;
  if (o.commutative) {
    std::vector<double> v;
    switch (o.law) {
      case HermitianLaw::SigmaX:
        v = alternating_signs(d);
        break;
      case HermitianLaw::TwoPoint:
        v = alternating_signs(d);
        std::shuffle(v.begin(), v.end(), rng);
        break;
      case HermitianLaw::BoundedHermitian: {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        v.resize(static_cast<std::size_t>(d));
        for (auto& x : v) x = u(rng);
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / d;
        for (auto& x : v) x -= mean;
        double mx = 0.0;
        for (double x : v) mx = std::max(mx, std::abs(x));
        if (mx == 0.0) v = alternating_signs(d), mx = 1.0;
        for (auto& x : v) x /= mx;
        break;
      }
    }
    return Operator::diagonal(factor, v);
  }
  Matrix h = Matrix::Zero(d, d);
  switch (o.law) {
    case HermitianLaw::SigmaX:
      for (int i = 0; i + 1 < d; i += 2) h(i, i + 1) = h(i + 1, i) = 1.0;
      break;
    case HermitianLaw::TwoPoint: {
      const Matrix u = haar_unitary(d, rng);
      Matrix diag = Matrix::Zero(d, d);
      const auto s = alternating_signs(d);
      for (int i = 0; i < d; ++i) diag(i, i) = s[static_cast<std::size_t>(i)];
      h = u * diag * u.adjoint();
      h = (h + h.adjoint()) * 0.5;
      break;
    }
    case HermitianLaw::BoundedHermitian: {
      h = random_hermitian(factor, rng).block(0);
      h -= Matrix::Identity(d, d) * (h.trace() / static_cast<double>(d));
      const double n = op_norm(Operator(factor, {h}));
      if (n > 0.0) h /= n;
      break;
    }
  }
  return Operator(factor, {h});
}

}  // namespace

Martingale gen_tensor_hermitian(const TensorHermitianOptions& o) {
  if (o.steps == 0) throw std::invalid_argument("gen_tensor_hermitian: need N >= 1");
  if (o.factor_dim < 2) throw std::invalid_argument("gen_tensor_hermitian: factor dimension must be >= 2");
  if (o.law != HermitianLaw::BoundedHermitian && o.factor_dim % 2 != 0)
    throw std::invalid_argument("gen_tensor_hermitian: two-point and sigma_x laws need an even factor dimension");
  if (!(o.norm > 0.0)) throw std::invalid_argument("gen_tensor_hermitian: norm must be positive");
  if (o.envelope && !(*o.envelope > 0.0)) throw std::invalid_argument("gen_tensor_hermitian: envelope must be positive");
  const AlgebraPtr factor = o.commutative ? TracialAlgebra::uniform_atoms(static_cast<std::size_t>(o.factor_dim))
                                          : TracialAlgebra::matrix(o.factor_dim);
  std::vector<AlgebraPtr> factors(o.steps, factor);
  const TensorTower tower = tensor_filtration(factors, o.dim_cap);
  Rng rng(o.seed);
  std::vector<Operator> diffs;
  diffs.reserve(o.steps);
  for (std::size_t k = 1; k <= o.steps; ++k) {
    Operator h = draw_factor(factor, o, rng);
    double target = o.norm;
    if (o.envelope) {
      const double kk = static_cast<double>(k);
      target = std::min(target, *o.envelope * std::sqrt(kk) / log_scale(kk));
    }
    h *= cplx(target, 0.0);
    h -= Operator::scalar(factor, trace(h));
    diffs.push_back(embed_factor(tower.algebra, tower.factors, k - 1, h));
  }
  return Martingale::from_differences(tower.filtration, std::move(diffs));
}

AlgebraPtr TwoPointLaw::algebra() const {
  const std::vector<double> w{p, 1.0 - p};
  return TracialAlgebra::atoms(w);
}

Operator TwoPointLaw::difference(const AlgebraPtr& alg) const {
  const std::vector<double> v{high(), low()};
  return Operator::diagonal(alg, v);
}

TwoPointLaw gen_skewed_twopoint(double p, double M) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("gen_skewed_twopoint: p must lie in (0, 1)");
  if (!(M > 0.0)) throw std::invalid_argument("gen_skewed_twopoint: M must be positive");
  return TwoPointLaw{p, M};
}

Martingale gen_skewed_tower(std::size_t steps, const TwoPointLaw& law) {
  if (steps == 0 || steps > 12) throw std::invalid_argument("gen_skewed_tower: need 1 <= N <= 12");
  const AlgebraPtr factor = law.algebra();
  std::vector<AlgebraPtr> factors(steps, factor);
  const TensorTower tower = tensor_filtration(factors);
  std::vector<Operator> diffs;
  for (std::size_t k = 0; k < steps; ++k)
    diffs.push_back(embed_factor(tower.algebra, tower.factors, k, law.difference(factor)));
  return Martingale::from_differences(tower.filtration, std::move(diffs));
}

// ---------------------------------------------------------------------------

Matrix gue_sample(int d, Rng& rng) {
  if (d < 1) throw std::invalid_argument("gue_sample: dimension must be >= 1");
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  std::normal_distribution<double> diag(0.0, sd);
  std::normal_distribution<double> off(0.0, sd / std::sqrt(2.0));
  Matrix h(d, d);
  for (int i = 0; i < d; ++i) {
    h(i, i) = diag(rng);
    for (int j = i + 1; j < d; ++j) {
      const double re = off(rng);
      const double im = off(rng);
      h(i, j) = cplx(re, im);
      h(j, i) = cplx(re, -im);
    }
  }
  return h;
}

GueStream::GueStream(int dim, std::uint64_t seed) : dim_(dim), rng_(seed), sum_(Matrix::Zero(dim, dim)) {
  if (dim < 1 || dim > 512) throw std::invalid_argument("GueStream: dimension must lie in [1, 512]");
}

const Matrix& GueStream::step() {
  sum_ += gue_sample(dim_, rng_);
  ++time_;
  return sum_;
}

std::vector<Operator> gen_gue_sum(int dim, std::size_t steps, std::uint64_t seed) {
  if (dim < 1 || dim > 512) throw std::invalid_argument("gen_gue_sum: dimension must lie in [1, 512]");
  if (static_cast<double>(steps) * dim * dim > 2e7) throw std::invalid_argument("gen_gue_sum: N d^2 exceeds 2e7");
  const AlgebraPtr alg = TracialAlgebra::matrix(dim);
  GueStream stream(dim, seed);
  std::vector<Operator> out;
  out.reserve(steps + 1);
  out.push_back(Operator::zero(alg));
  for (std::size_t k = 0; k < steps; ++k) out.emplace_back(alg, std::vector<Matrix>{stream.step()});
  return out;
}

}  // namespace nclil
