#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "nclil/martingale.hpp"
#include "nclil/tensor.hpp"
#include "test_support.hpp"

using namespace nclil;

namespace {

std::vector<double> diag_of(const Operator& x) {
  std::vector<double> out;
  for (const auto& b : x.blocks())
    for (Eigen::Index i = 0; i < b.rows(); ++i) out.push_back(b(i, i).real());
  return out;
}

std::vector<double> sorted_eigs(const Operator& x) {
  std::vector<double> out;
  const Spectrum spec = herm_spectrum(x);
  for (const auto& b : spec.blocks())
    for (Eigen::Index i = 0; i < b.values.size(); ++i) out.push_back(b.values(i));
  std::sort(out.begin(), out.end());
  return out;
}

// Random non-self-adjoint martingale on a two-factor tensor tower.
Martingale random_tensor_martingale(Rng& rng, int d1, int d2) {
  const std::vector<int> dims{d1, d2};
  const TensorTower tower = tensor_filtration(dims);
  std::vector<Operator> diffs;
  for (std::size_t k = 0; k < 2; ++k) {
    // a (x) 1 part with mean zero plus a component of the previous factor
    Operator h = random_operator(tower.factors[k], rng);
    h -= Operator::scalar(tower.factors[k], trace(h));
    Operator dk = embed_factor(tower.algebra, tower.factors, k, h);
    if (k == 1) {
      Operator a = random_operator(tower.factors[0], rng);
      dk = embed_factor(tower.algebra, tower.factors, 0, a) * dk;
    }
    diffs.push_back(dk);
  }
  return Martingale::from_differences(tower.filtration, std::move(diffs));
}

}  // namespace

TEST_CASE("iterated_log") {
  CHECK(iterated_log(10.0) == 1.0);
  CHECK(iterated_log(std::exp(std::exp(2.0))) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(iterated_log(0.5) == 1.0);
  CHECK(iterated_log(0.0) == 1.0);
  CHECK(iterated_log(1.0) == 1.0);
  CHECK(iterated_log(1e100) == doctest::Approx(std::log(100 * std::log(10.0))));
  CHECK_THROWS_AS(iterated_log(-1.0), std::invalid_argument);
  // nondecreasing
  double prev = 0.0;
  for (double x = 0.0; x < 1e6; x = x * 1.3 + 0.1) {
    CHECK(iterated_log(x) >= prev);
    prev = iterated_log(x);
  }
}

TEST_CASE("martingale validation") {
  const std::vector<int> dims{2, 2};
  const TensorTower tower = tensor_filtration(dims);
  auto alg = tower.algebra;
  const Operator z = Operator::zero(alg);
  const Operator sx = embed_factor(alg, tower.factors, 0, testing::pauli_x(tower.factors[0]));
  CHECK_NOTHROW(Martingale(tower.filtration, {z, sx}));
  // x_1 must be mean zero
  CHECK_THROWS_AS(Martingale(tower.filtration, {z, sx + Operator::identity(alg)}), std::invalid_argument);
  // x_1 must be adapted to M_1
  const Operator late = embed_factor(alg, tower.factors, 1, testing::pauli_x(tower.factors[1]));
  CHECK_THROWS_AS(Martingale(tower.filtration, {z, late}), std::invalid_argument);
  CHECK_THROWS_AS(Martingale(tower.filtration, {Operator::identity(alg)}), std::invalid_argument);
  CHECK_THROWS_AS(Martingale(tower.filtration, {z, sx, sx, sx}), std::invalid_argument);
  const Martingale unchecked(tower.filtration, {z, late}, false);
  CHECK_FALSE(unchecked.check().ok());
}

TEST_CASE("bracket examples") {
  // tensor Rademacher: s_n^2 = n exactly
  const Martingale m = gen_dyadic_rademacher(6, 3);
  const ScaleTrack s = bracket(m);
  for (std::size_t n = 0; n <= 6; ++n) {
    CHECK(s.s2[n] == doctest::Approx(static_cast<double>(n)).epsilon(1e-14));
    CHECK(s.t2[n] == s.s2[n]);
    CHECK(s.u[n] >= 1.0);
  }

  // single non-self-adjoint step [[0,2],[0,0]]
  auto m2 = TracialAlgebra::matrix(2);
  auto filt = std::make_shared<const Filtration>(
      std::vector<Subalgebra>{Subalgebra::scalars(m2), Subalgebra::whole(m2)});
  Matrix d(2, 2);
  d << 0, 2, 0, 0;
  // tau(d) = 0 and E_0 = tau
  const Martingale one = Martingale::from_differences(filt, {Operator(m2, {d})});
  CHECK_FALSE(one.self_adjoint());
  const ScaleTrack st = bracket(one);
  // E_0(d*d) = tau(diag(0,4)) = 2, likewise for dd*
  CHECK(st.col[1] == doctest::Approx(2.0));
  CHECK(st.row[1] == doctest::Approx(2.0));
  CHECK(st.t2[1] == doctest::Approx(2.0));
  // with the trivial conditioning (E_0 = identity) the bracket is the operator itself: t^2 = 4
  const Operator dd = Operator(m2, {d});
  CHECK(op_norm(dd.adjoint() * dd) == doctest::Approx(4.0));
  CHECK(op_norm(dd * dd.adjoint()) == doctest::Approx(4.0));

  // zero martingale
  const std::vector<int> dims{2};
  const TensorTower tw = tensor_filtration(dims);
  const Martingale zm = Martingale::from_differences(tw.filtration, {Operator::zero(tw.algebra)});
  const ScaleTrack zs = bracket(zm);
  CHECK(zs.s2[1] == 0.0);
  CHECK(zs.u[1] == 1.0);
}

TEST_CASE("bracket monotone and t2 dominates both sides") {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const Martingale m = random_tensor_martingale(rng, 2, 3);
    const ScaleTrack s = bracket(m);
    for (std::size_t n = 1; n < s.s2.size(); ++n) {
      CHECK(s.s2[n] >= s.s2[n - 1] * (1 - 1e-12));
      CHECK(s.t2[n] >= s.col[n]);
      CHECK(s.t2[n] >= s.row[n]);
      CHECK(s.u[n] >= 1.0);
    }
    CHECK(op_norm(bracket_operator(m, m.steps())) == doctest::Approx(s.col.back()));
  }
}

TEST_CASE("dilation") {
  auto m2 = TracialAlgebra::matrix(2);
  auto doubled = doubled_algebra(m2);
  const Operator d = testing::nilpotent(m2);
  const Operator dd = dilate_operator(doubled, d);
  CHECK(dd.is_self_adjoint());
  const auto eigs = sorted_eigs(dd);
  REQUIRE(eigs.size() == 4);
  // eigenvalues -1, 0, 0, 1: singular values {1, 1, 0, 0}
  CHECK(eigs[0] == doctest::Approx(-1.0));
  CHECK(std::abs(eigs[1]) < 1e-14);
  CHECK(std::abs(eigs[2]) < 1e-14);
  CHECK(eigs[3] == doctest::Approx(1.0));
  CHECK(op_norm(dd) == doctest::Approx(op_norm(d)));

  // self-adjoint x: spectrum +-lambda_j
  const std::vector<double> lam{3.0, -0.5};
  const Operator x = Operator::diagonal(m2, lam);
  const auto ex = sorted_eigs(dilate_operator(doubled, x));
  const std::vector<double> expected{-3.0, -0.5, 0.5, 3.0};
  for (std::size_t i = 0; i < 4; ++i) CHECK(ex[i] == doctest::Approx(expected[i]));

  CHECK(op_norm(dilate_operator(doubled, Operator::zero(m2))) == 0.0);

  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Martingale m = random_tensor_martingale(rng, 2, 2);
    const Martingale dm = dilate(m);
    CHECK(dm.self_adjoint());
    CHECK(dm.check().ok());
    const ScaleTrack s = bracket(m);
    const ScaleTrack ds = bracket(dm);
    for (std::size_t k = 1; k <= m.steps(); ++k) {
      CHECK(std::abs(op_norm(dm.d(k)) - op_norm(m.d(k))) <= 1e-12);
      CHECK(std::abs(ds.s2[k] - s.t2[k]) <= 1e-10 * std::max(1.0, s.t2[k]));
    }
  }
}

TEST_CASE("truncate_center") {
  auto atoms = TracialAlgebra::uniform_atoms(4);
  auto filt = std::make_shared<const Filtration>(
      std::vector<Subalgebra>{Subalgebra::scalars(atoms), Subalgebra::whole(atoms)});
  const std::vector<double> dv{0.1, -0.1, 5, -5};
  const Operator d = Operator::diagonal(atoms, dv);
  const auto parts = truncate_center(d, 1.0, *filt, 1);
  const std::vector<double> small{0.1, -0.1, 0, 0};
  const std::vector<double> large{0, 0, 5, -5};
  CHECK(op_norm(parts.small - Operator::diagonal(atoms, small)) < 1e-15);
  CHECK(op_norm(parts.large - Operator::diagonal(atoms, large)) < 1e-15);
  CHECK(op_norm(parts.small + parts.large - d) < 1e-11);

  const auto all_small = truncate_center(d, 10.0, *filt, 1);
  CHECK(op_norm(all_small.small - d) < 1e-14);
  CHECK(op_norm(all_small.large) < 1e-14);
  const auto all_large = truncate_center(d, 0.01, *filt, 1);
  CHECK(op_norm(all_large.small) < 1e-14);
  CHECK(op_norm(all_large.large - d) < 1e-14);
  const auto inf = truncate_center(d, kInf, *filt, 1);
  CHECK(op_norm(truncate_center(inf.small, kInf, *filt, 1).small - d) < 1e-14);

  CHECK_THROWS_AS(truncate_center(testing::nilpotent(TracialAlgebra::matrix(2)), 1.0, *filt, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(truncate_center(d, -1.0, *filt, 1), std::invalid_argument);

  // on random tensor-tower differences: small + large = d and ||small|| <= 2 cutoff
  TensorHermitianOptions o;
  o.steps = 3;
  o.law = HermitianLaw::BoundedHermitian;
  o.seed = 8;
  const Martingale m = gen_tensor_hermitian(o);
  for (std::size_t k = 1; k <= 3; ++k)
    for (double c : {0.1, 0.4, 0.9}) {
      const auto p = truncate_center(m.d(k), c, m.filtration(), k);
      CHECK(op_norm(p.small + p.large - m.d(k)) < 1e-11);
      CHECK(op_norm(p.small) <= 2 * c + 1e-12);
      CHECK(op_norm(m.filtration().expect(k - 1, p.small)) < 1e-12);
    }
}

TEST_CASE("hw_split") {
  auto atoms = TracialAlgebra::uniform_atoms(4);
  const std::vector<double> yv{0.1, -0.1, 3, -3};
  const Operator y = Operator::diagonal(atoms, yv);
  const HwParts h = hw_split(y, 4, 1.0);
  CHECK(h.c1 == doctest::Approx(1.0));
  CHECK(h.c2 == doctest::Approx(2.0));
  const std::vector<double> yp{0.1, -0.1, 0, 0};
  const std::vector<double> w{0, 0, 3, -3};
  CHECK(op_norm(h.yprime - Operator::diagonal(atoms, yp)) < 1e-15);
  CHECK(op_norm(h.w - Operator::diagonal(atoms, w)) < 1e-15);
  CHECK(op_norm(h.z) < 1e-15);

  auto m2 = TracialAlgebra::matrix(2);
  const std::vector<double> tiny{0.2, -0.2};
  const Operator yt = Operator::diagonal(m2, tiny);
  const HwParts ht = hw_split(yt, 4, 1.0);
  CHECK(op_norm(ht.yprime - yt) < 1e-15);
  CHECK(op_norm(ht.z) + op_norm(ht.w) < 1e-15);
  const std::vector<double> huge{7.0, -7.0};
  const HwParts hh = hw_split(Operator::diagonal(m2, huge), 4, 1.0);
  CHECK(op_norm(hh.w - Operator::diagonal(m2, huge)) < 1e-15);
  CHECK(op_norm(hh.yprime) + op_norm(hh.z) < 1e-15);

  const std::vector<double> biased{1.0, 0.0};
  CHECK_THROWS_AS(hw_split(Operator::diagonal(m2, biased), 4, 1.0), std::invalid_argument);

  // random traceless Hermitian: parts re-sum and have disjoint supports
  Rng rng(5);
  auto m5 = TracialAlgebra::matrix(5);
  for (int t = 0; t < 20; ++t) {
    Operator r = random_hermitian(m5, rng) * 3.0;
    r -= Operator::scalar(m5, trace(r));
    const HwParts p = hw_split(r, 1 + static_cast<std::size_t>(t), 0.5);
    CHECK(op_norm(p.yprime + p.z + p.w - r) < 1e-10);
    CHECK(op_norm(p.small_raw * p.mid_raw) < 1e-12);
    CHECK(op_norm(p.small_raw * p.large_raw) < 1e-12);
    CHECK(op_norm(p.mid_raw * p.large_raw) < 1e-12);
  }
}

TEST_CASE("dyadic Rademacher generator") {
  const Martingale m = gen_dyadic_rademacher(1, 0);
  const auto s = sorted_eigs(m.d(1));
  CHECK(s.front() == -1.0);
  CHECK(s.back() == 1.0);
  CHECK(std::abs(trace(m.d(1))) == 0.0);
  CHECK(bracket(m).s2[1] == 1.0);

  const Martingale a = gen_dyadic_rademacher(8, 42);
  const Martingale b = gen_dyadic_rademacher(8, 42);
  for (std::size_t k = 1; k <= 8; ++k) CHECK(diag_of(a.d(k)) == diag_of(b.d(k)));
  CHECK(a.check().martingale_error == 0.0);
  CHECK(a.algebra()->num_blocks() == 256);
  CHECK_THROWS_AS(gen_dyadic_rademacher(13, 0), std::invalid_argument);

  // every sign path appears exactly once
  std::set<std::vector<int>> paths;
  for (std::size_t atom = 0; atom < 256; ++atom) {
    std::vector<int> path;
    for (std::size_t k = 1; k <= 8; ++k) path.push_back(static_cast<int>(a.d(k).block(atom)(0, 0).real()));
    paths.insert(path);
  }
  CHECK(paths.size() == 256);
}

TEST_CASE("sampled Rademacher generator") {
  const Martingale m = gen_sampled_rademacher(6, 50, 7);
  CHECK(m.steps() == 6);
  CHECK(m.check().adapted_error < 1e-12);
  // not an exact martingale: the defect is sampling error
  CHECK(m.check().martingale_error > 0.0);
  CHECK(m.check().martingale_error < 1.0);
  const Martingale same = gen_sampled_rademacher(6, 50, 7);
  for (std::size_t k = 1; k <= 6; ++k) CHECK(diag_of(m.d(k)) == diag_of(same.d(k)));
}

TEST_CASE("Rademacher ensemble matches the CLT variance") {
  double sum2 = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    RademacherEnsemble e(2048, seed);
    for (int n = 0; n < 10000; ++n) e.step();
    for (auto s : e.sums()) sum2 += static_cast<double>(s) * static_cast<double>(s) / 1e4;
    count += e.atoms();
  }
  CHECK(sum2 / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.05));

  RademacherEnsemble a(100, 9), b(100, 9);
  for (int n = 0; n < 50; ++n) a.step(), b.step();
  CHECK(a.sums() == b.sums());
  CHECK(a.time() == 50);
  for (auto s : a.sums()) CHECK(std::abs(s) % 2 == 0);
}

TEST_CASE("tensor Hermitian generator") {
  TensorHermitianOptions o;
  o.steps = 5;
  o.law = HermitianLaw::SigmaX;
  const Martingale sx = gen_tensor_hermitian(o);
  const ScaleTrack s = bracket(sx);
  for (std::size_t n = 0; n <= 5; ++n) CHECK(s.s2[n] == doctest::Approx(static_cast<double>(n)).epsilon(1e-14));
  for (std::size_t i = 1; i <= 5; ++i)
    for (std::size_t j = i + 1; j <= 5; ++j) CHECK(std::abs(trace(sx.d(i) * sx.d(j))) < 1e-15);

  for (auto law : {HermitianLaw::TwoPoint, HermitianLaw::BoundedHermitian}) {
    o.law = law;
    o.steps = 4;
    o.seed = 11;
    const Martingale m = gen_tensor_hermitian(o);
    CHECK(m.self_adjoint());
    CHECK(m.check().ok(1e-12));
    for (std::size_t k = 1; k <= 4; ++k) {
      CHECK(op_norm(m.d(k)) == doctest::Approx(1.0));
      CHECK(op_norm(m.filtration().expect(k - 1, m.d(k))) < 1e-13);
    }
  }

  // envelope clip ||h_k|| <= e sqrt(k) / u_k
  o.law = HermitianLaw::TwoPoint;
  o.norm = 10.0;
  o.envelope = 0.5;
  o.commutative = true;
  o.steps = 10;
  const Martingale env = gen_tensor_hermitian(o);
  for (std::size_t k = 1; k <= 10; ++k) {
    const double kk = static_cast<double>(k);
    CHECK(op_norm(env.d(k)) <= 0.5 * std::sqrt(kk) / log_scale(kk) * (1 + 1e-12));
  }
  CHECK(env.algebra()->num_blocks() == 1024);

  o.factor_dim = 3;
  CHECK_THROWS_AS(gen_tensor_hermitian(o), std::invalid_argument);
  o.factor_dim = 2;
  o.commutative = false;
  o.steps = 13;
  CHECK_THROWS_AS(gen_tensor_hermitian(o), std::invalid_argument);
}

TEST_CASE("skewed two-point law") {
  const TwoPointLaw sym = gen_skewed_twopoint(0.5, 2.0);
  CHECK(sym.low() == -2.0);
  CHECK(sym.variance() == doctest::Approx(4.0));

  const TwoPointLaw law = gen_skewed_twopoint(0.05, 1.0);
  CHECK(law.variance() == doctest::Approx(0.05 / 0.95).epsilon(1e-15));
  CHECK(law.variance() == doctest::Approx(0.05263).epsilon(1e-4));
  const AlgebraPtr alg = law.algebra();
  const Operator d = law.difference(alg);
  CHECK(std::abs(trace(d)) < 1e-17);
  CHECK(trace(d * d).real() == doctest::Approx(law.variance()).epsilon(1e-15));
  CHECK(op_norm(d) == 1.0);

  const Martingale tower = gen_skewed_tower(4, law);
  const ScaleTrack s = bracket(tower);
  CHECK(s.s2[4] == doctest::Approx(4 * law.variance()).epsilon(1e-13));

  CHECK_THROWS_AS(gen_skewed_twopoint(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gen_skewed_twopoint(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gen_skewed_twopoint(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("GUE generator") {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Matrix h = gue_sample(200, rng);
    CHECK((h - h.adjoint()).norm() == 0.0);
    auto m = TracialAlgebra::matrix(200);
    const Operator op(m, {h});
    const double n = op_norm(op);
    if (n >= 1.8 && n <= 2.2) ++inside;
    CHECK(std::abs(trace(op)) <= 3.0 / 200.0);
    // E|h_ij|^2 = 1/d so tau(h^2) ~ 1
    CHECK(trace(op * op).real() == doctest::Approx(1.0).epsilon(0.02));
  }
  CHECK(inside == 10);

  const auto xs = gen_gue_sum(20, 5, 3);
  CHECK(xs.size() == 6);
  CHECK(op_norm(xs[0]) == 0.0);
  const auto ys = gen_gue_sum(20, 5, 3);
  CHECK(op_norm(xs[5] - ys[5]) == 0.0);
  CHECK_THROWS_AS(gen_gue_sum(600, 1, 0), std::invalid_argument);
}
