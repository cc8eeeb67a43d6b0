#include "nclil/suites.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "nclil/conditional_expectation.hpp"
#include "nclil/inequalities.hpp"
#include "nclil/martingale.hpp"
#include "nclil/random.hpp"
#include "nclil/tensor.hpp"

namespace nclil {

bool SuiteResult::matched() const { return first_mismatch() == nullptr; }

const Verdict* SuiteResult::first_mismatch() const {
  for (const auto& v : verdicts)
    if (!v.matched()) return &v;
  return nullptr;
}

DimRange parse_dims(const std::string& text) {
  DimRange r;
  const auto dots = text.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      r.lo = r.hi = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument("trailing");
    } else {
      r.lo = std::stoi(text.substr(0, dots), &used);
      if (used != dots) throw std::invalid_argument("trailing");
      const std::string tail = text.substr(dots + 2);
      r.hi = std::stoi(tail, &used);
      if (used != tail.size()) throw std::invalid_argument("trailing");
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("dims: expected 'a..b' or an integer, got '" + text + "'");
  }
  if (r.lo < 1 || r.hi < r.lo || r.hi > 64) throw std::invalid_argument("dims: need 1 <= a <= b <= 64");
  return r;
}

namespace {

Verdict make_verdict(std::string id, bool expected, bool observed, double value, double threshold,
                     std::string detail = {}) {
  return Verdict{std::move(id), expected, observed, value, threshold, std::move(detail)};
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// inf{ s >= 0 : sum of weights of entries with |v| > s <= t } by enumerating
// every candidate level.
double mu_brute_force(const std::vector<double>& values, const std::vector<double>& weights, double t) {
  std::vector<double> candidates{0.0};
  for (double v : values) candidates.push_back(std::abs(v));
  std::sort(candidates.begin(), candidates.end());
  for (double s : candidates) {
    double mass = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (std::abs(values[i]) > s) mass += weights[i];
    if (mass <= t) return s;
  }
  return candidates.back();
}

Operator random_projection(const AlgebraPtr& alg, Rng& rng) {
  return spectral_indicator(random_hermitian(alg, rng), Interval::closed_above(0.0));
}

}  // namespace

SuiteResult suite_algebra(std::size_t samples, std::uint64_t seed) {
  SuiteResult out{"algebra", {}};
  double trace_err = 0.0, pos_err = 0.0, order_err = 0.0, meet_err = 0.0;
  std::size_t mu_mismatch = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(derive_seed(seed, i));
    const AlgebraPtr alg = random_algebra(rng, 3, 5);
    const Operator x = random_operator(alg, rng), y = random_operator(alg, rng);
    const double nx = op_norm(x), ny = op_norm(y);
    trace_err = std::max(trace_err, std::abs(trace(Operator::identity(alg)) - 1.0));
    trace_err = std::max(trace_err, std::abs(trace(x * y) - trace(y * x)) / std::max(1.0, nx * ny));
    const cplx txx = trace(x.adjoint() * x);
    pos_err = std::max(pos_err, std::max(0.0, -txx.real()) + std::abs(txx.imag()) / std::max(1.0, nx * nx));
    const double n1 = lp_norm(x, 1.0), n2 = lp_norm(x, 2.0);
    order_err = std::max({order_err, (n1 - n2) / std::max(1.0, nx), (n2 - nx) / std::max(1.0, nx)});

    // s-numbers of a diagonal against brute-force enumeration; half of the
    // samples draw from a small value set so ties occur.
    std::vector<double> diag(alg->total_dim()), weights;
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_int_distribution<int> small(-3, 3);
    for (auto& v : diag) v = (i % 2) ? static_cast<double>(small(rng)) : u(rng);
    for (const auto& b : alg->blocks())
      for (int r = 0; r < b.dim; ++r) weights.push_back(b.weight / b.dim);
    std::uniform_real_distribution<double> ut(0.01, 0.99);
    const double t = ut(rng);
    const double got = mu(Operator::diagonal(alg, diag), t), want = mu_brute_force(diag, weights, t);
    if (got != want) ++mu_mismatch;

    const Operator p = random_projection(alg, rng), q = random_projection(alg, rng);
    const std::vector<Operator> pq{p, q};
    const Operator e = projection_meet(pq);
    double err = is_projection(e) ? 0.0 : 1.0;
    err = std::max({err, op_norm(e * p - e), op_norm(e * q - e)});
    err = std::max(err, (1.0 - real_trace(e)) - (2.0 - real_trace(p) - real_trace(q)));
    meet_err = std::max(meet_err, err);
  }
  out.verdicts.push_back(make_verdict("algebra.trace-state", true, trace_err <= 1e-12, trace_err, 1e-12));
  out.verdicts.push_back(make_verdict("algebra.positivity", true, pos_err <= 1e-12, pos_err, 1e-12));
  out.verdicts.push_back(make_verdict("algebra.norm-order", true, order_err <= 1e-12, order_err, 1e-12));
  out.verdicts.push_back(make_verdict("algebra.mu-bruteforce", true, mu_mismatch == 0, static_cast<double>(mu_mismatch),
                                      0.0, fmt("%.0f of %.0f samples disagree", static_cast<double>(mu_mismatch),
                                               static_cast<double>(samples))));
  out.verdicts.push_back(make_verdict("algebra.meet", true, meet_err <= 1e-9, meet_err, 1e-9));
  return out;
}

// ---------------------------------------------------------------------------

SuiteResult suite_conditional_expectation(std::size_t samples, std::uint64_t seed, bool large) {
  struct Tower {
    std::string name;
    std::vector<Subalgebra> levels;
  };
  std::vector<Tower> towers;
  for (const std::vector<int>& dims : {std::vector<int>{2, 3, 2}, std::vector<int>{2, 2, 2, 2, 2, 2},
                                       std::vector<int>{4, 4, 4}}) {
    const TensorTower t = tensor_filtration(dims);
    std::string name = "tensor";
    for (int d : dims) name += "-" + std::to_string(d);
    towers.push_back({name, t.filtration->levels()});
  }
  {
    Rng rng(derive_seed(seed, 1000));
    const AlgebraPtr alg = TracialAlgebra::make({{3, 0.5}, {2, 0.3}, {1, 0.2}});
    const Operator g1 = random_hermitian(alg, rng), g2 = random_hermitian(alg, rng);
    std::vector<Subalgebra> levels{Subalgebra::scalars(alg)};
    const std::vector<Operator> one{g1}, two{g1, g2};
    levels.push_back(span_subalgebra(alg, one));
    levels.push_back(span_subalgebra(alg, two));
    towers.push_back({"generated-3+2+1", std::move(levels)});
  }
  if (large) {
    const std::vector<AlgebraPtr> factors(12, TracialAlgebra::uniform_atoms(2));
    towers.push_back({"tensor-atoms-4096", tensor_filtration(factors).filtration->levels()});
  }

  double tower_err = 0.0, trace_err = 0.0, bimod_err = 0.0, contr_err = 0.0;
  std::string worst_tower, worst_trace, worst_bimod, worst_contr;
  auto track = [](double v, double& best, std::string& where, const std::string& name) {
    if (v > best) {
      best = v;
      where = name;
    }
  };
  for (std::size_t ti = 0; ti < towers.size(); ++ti) {
    const Tower& t = towers[ti];
    const TowerReport rep = verify_tower(t.levels, samples, derive_seed(seed, ti));
    track(rep.max_error, tower_err, worst_tower, t.name);
    const AlgebraPtr& alg = t.levels.front().parent();
    Rng rng(derive_seed(seed ^ 0x5eedULL, ti));
    for (std::size_t s = 0; s < samples; ++s) {
      const Subalgebra& sub = t.levels[s % t.levels.size()];
      const Operator x = random_operator(alg, rng);
      const Operator a = sub.expect(random_operator(alg, rng)), b = sub.expect(random_operator(alg, rng));
      const Operator ex = sub.expect(x);
      const double nx = std::max(op_norm(x), 1e-300);
      track(std::abs(trace(ex) - trace(x)) / nx, trace_err, worst_trace, t.name);
      const double scale = std::max(op_norm(a) * nx * op_norm(b), 1e-300);
      track(op_norm(sub.expect(a * x * b) - a * ex * b) / scale, bimod_err, worst_bimod, t.name);
      track(std::max(0.0, op_norm(ex) - nx) / nx, contr_err, worst_contr, t.name);
    }
  }
  SuiteResult out{"conditional-expectation", {}};
  out.verdicts.push_back(make_verdict("ce.tower", true, tower_err <= 1e-9, tower_err, 1e-9, worst_tower));
  out.verdicts.push_back(make_verdict("ce.trace", true, trace_err <= 1e-9, trace_err, 1e-9, worst_trace));
  out.verdicts.push_back(make_verdict("ce.bimodule", true, bimod_err <= 1e-9, bimod_err, 1e-9, worst_bimod));
  out.verdicts.push_back(make_verdict("ce.contractive", true, contr_err <= 1e-9, contr_err, 1e-9, worst_contr));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

AlgebraPtr matrix_for(const DimRange& d, std::size_t i) {
  return TracialAlgebra::matrix(d.lo + static_cast<int>(i % static_cast<std::size_t>(d.hi - d.lo + 1)));
}

Verdict battery_verdict(const std::string& id, const BatteryReport& b) {
  std::string detail = fmt("%.0f instances, %.0f failures", static_cast<double>(b.count), static_cast<double>(b.failures));
  if (b.worst) detail += ", worst " + b.worst->instance;
  return make_verdict(id, true, b.pass(), b.min_rel_slack, 0.0, detail);
}

}  // namespace

SuiteResult suite_gt(const GtOptions& o) {
  SuiteResult out{"gt", {}};
  const BatteryReport b = run_battery("gt", o.count, o.seed, [&](std::size_t i, Rng& rng) {
    const AlgebraPtr alg = matrix_for(o.dims, i);
    IneqReport r = gt_gap(random_hermitian(alg, rng), random_hermitian(alg, rng)).report;
    r.instance = "#" + std::to_string(i) + " d=" + std::to_string(alg->total_dim());
    return r;
  });
  out.verdicts.push_back(battery_verdict("gt.battery", b));

  const AlgebraPtr m2 = TracialAlgebra::matrix(2);
  Matrix sx(2, 2), sz(2, 2);
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  const GtReport p = gt_gap(Operator(m2, {sx}), Operator(m2, {sz}));
  const double err = std::max(std::abs(p.report.lhs - 2.17821), std::abs(p.report.rhs - 2.38110));
  out.verdicts.push_back(make_verdict("gt.pauli", true, err <= 1e-4 && p.report.pass(), err, 1e-4,
                                      fmt("lhs %.6f rhs %.6f", p.report.lhs, p.report.rhs)));
  return out;
}

SuiteResult suite_igt(const IgtOptions& o) {
  SuiteResult out{"igt", {}};
  double agree = 0.0, min_slack = kInf, a0 = 0.0;
  bool converged = true;
  for (std::size_t i = 0; i < o.count; ++i) {
    Rng rng(derive_seed(o.seed, i));
    const AlgebraPtr alg = matrix_for(o.dims, i);
    const Operator a = random_hermitian(alg, rng), b = random_hermitian(alg, rng), c = random_hermitian(alg, rng);
    const IgtValue k = igt_rhs(a, b, c, IgtMode::Kernel);
    const IgtValue q = igt_rhs(a, b, c, IgtMode::Quadrature);
    converged = converged && q.converged;
    agree = std::max(agree, std::abs(k.value - q.value) / std::max(std::abs(k.value), 1e-300));
    min_slack = std::min(min_slack, igt_gap(a, b, c).rel_slack);
    const Operator half = exp_herm(c * 0.5);
    const double direct = real_trace(half * exp_herm(b) * half);
    a0 = std::max(a0, std::abs(igt_rhs(Operator::zero(alg), b, c).value - direct) / direct);
  }
  out.verdicts.push_back(make_verdict("igt.agreement", true, converged && agree <= 1e-6, agree, 1e-6,
                                      converged ? "" : "quadrature did not converge"));
  out.verdicts.push_back(make_verdict("igt.slack", true, min_slack >= -1e-6, min_slack, -1e-6));
  out.verdicts.push_back(make_verdict("igt.a-zero", true, a0 <= 1e-10, a0, 1e-10));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> linear_grid(double hi, std::size_t points) {
  std::vector<double> g;
  for (std::size_t i = 0; i < points; ++i) g.push_back(hi * static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

struct ExpTally {
  std::size_t checks = 0;
  std::size_t failures = 0;
  double min_rel_slack = kInf;
  std::string worst;
  void add(const std::vector<IneqReport>& reps, const std::string& instance) {
    for (const auto& r : reps) {
      ++checks;
      if (!r.pass()) ++failures;
      if (r.rel_slack < min_rel_slack) {
        min_rel_slack = r.rel_slack;
        worst = instance + " " + r.instance + " (" + to_string(r.status) + ")";
      }
    }
  }
};

}  // namespace

SuiteResult suite_expineq(const ExpOptions& o) {
  SuiteResult out{"expineq", {}};
  if (!o.as_stated) {
    struct Instance {
      std::string name;
      Martingale m;
    };
    std::vector<Instance> instances;
    for (std::size_t n : {4u, 8u, 12u}) instances.push_back({"rademacher-N" + std::to_string(n), gen_dyadic_rademacher(n, o.seed + n)});
    for (double p : {0.01, 0.05, 0.2, 0.5})
      instances.push_back({fmt("skewed-p%g", p), gen_skewed_tower(8, gen_skewed_twopoint(p, 1.0))});
    for (std::size_t i = 0; i < o.count; ++i) {
      TensorHermitianOptions t;
      t.steps = 3 + i % 2;
      t.factor_dim = 2;
      t.seed = derive_seed(o.seed, i);
      t.law = (i % 2) ? HermitianLaw::BoundedHermitian : HermitianLaw::TwoPoint;
      t.norm = 1.5;
      t.envelope = 0.8;
      instances.push_back({"hermitian-" + std::to_string(i), gen_tensor_hermitian(t)});
    }
    ExpTally part1, part2;
    for (const auto& inst : instances) {
      double M = 0.0;
      for (const auto& d : inst.m.differences()) M = std::max(M, op_norm(d));
      const double D2 = bracket(inst.m).s2.back();
      part1.add(exp_check1(inst.m, M, D2, linear_grid(6.0 / M, 25)), inst.name);
      const double lam_max = 3.0 * o.eps / ((1.0 + o.eps) * M);
      part2.add(exp_check2(inst.m, M, D2, linear_grid(lam_max, 25), o.eps, Exp2Mode::Corrected), inst.name);
    }
    auto detail = [](const ExpTally& t) {
      return fmt("%.0f checks, %.0f failures", static_cast<double>(t.checks), static_cast<double>(t.failures)) +
             ", tightest " + t.worst;
    };
    out.verdicts.push_back(make_verdict("expineq.part1", true, part1.failures == 0, part1.min_rel_slack, 0.0, detail(part1)));
    out.verdicts.push_back(
        make_verdict("expineq.part2-corrected", true, part2.failures == 0, part2.min_rel_slack, 0.0, detail(part2)));
  } else {
    const TwoPointLaw law = gen_skewed_twopoint(0.05, 1.0);
    const Martingale m = gen_skewed_tower(1, law);
    const std::vector<double> lam{3.0};
    const IneqReport r = exp_check2(m, 1.0, law.variance(), lam, 1.0, Exp2Mode::AsStated).front();
    const double err = std::max(std::abs(r.lhs - 1.81552), std::abs(r.rhs - 1.60589));
    const bool documented = r.status == CheckStatus::Fail && err <= 1e-4;
    out.verdicts.push_back(make_verdict("expineq.as-stated-boundary", false, !documented, err, 1e-4,
                                        fmt("lhs %.6f rhs %.6f", r.lhs, r.rhs) + " status " + to_string(r.status)));
    const IneqReport s = exp2_counterexample_search(o.eps, 1.0);
    out.verdicts.push_back(make_verdict("expineq.as-stated-search", false, s.status != CheckStatus::Fail, s.rel_slack, 0.0,
                                        s.instance + fmt(" lhs %.6f rhs %.6f", s.lhs, s.rhs)));
  }
  return out;
}

SuiteResult suite_scalars() {
  SuiteResult out{"scalars", {}};
  double series_err = 0.0;
  bool g_monotone = true;
  double prev_g = -kInf;
  for (int i = -400; i <= 400; ++i) {
    const double s = i * 0.01;
    const double direct = std::exp(s) - s - 1.0;
    if (std::abs(s) > 0.05) series_err = std::max(series_err, std::abs(scalar_F(s) - direct) / std::max(direct, 1e-300));
    if (scalar_F(s) < 0.0) series_err = kInf;
    const double g = scalar_g(s);
    if (g < prev_g) g_monotone = false;
    prev_g = g;
  }
  out.verdicts.push_back(make_verdict("scalars.F", true, series_err <= 1e-12, series_err, 1e-12));
  out.verdicts.push_back(make_verdict("scalars.g-monotone", true, g_monotone, g_monotone ? 0.0 : 1.0, 0.0));

  double worst = kInf;
  for (double eps : {0.05, 0.3, 0.7, 1.0}) {
    const double smax = 3 * eps / (1 + eps);
    for (int i = 1; i <= 1000; ++i) {
      const double s = smax * i / 1000.0;
      const double rhs = (1 + eps) * s * s / 2;
      worst = std::min(worst, (rhs - scalar_F(s)) / rhs);
    }
  }
  out.verdicts.push_back(make_verdict("scalars.bernstein-corrected", true, worst >= -1e-14, worst, -1e-14));
  const double stated = (2.0 * 9.0 / 2.0 - scalar_F(3.0)) / scalar_F(3.0);
  out.verdicts.push_back(make_verdict("scalars.bernstein-as-stated", false, stated >= 0.0, stated, 0.0,
                                      fmt("F(3) = %.6f against (1+1) 3^2/2 = 9", scalar_F(3.0))));

  bool poly = true;
  std::vector<double> us;
  for (int i = -400; i <= 400; ++i) us.push_back(i * 0.05);
  for (double p : {1.0, 2.5, 4.0, 10.0}) poly = poly && poly_exp_grid(p, us).pass();
  out.verdicts.push_back(make_verdict("scalars.poly-exp", true, poly, poly ? 0.0 : 1.0, 0.0));
  return out;
}

SuiteResult suite_chebyshev(const ChebyshevOptions& o) {
  SuiteResult out{"chebyshev", {}};
  std::size_t broken = 0, scaling_fail = 0;
  std::uniform_real_distribution<double> ut(0.5, 3.0), ua(1.0, 3.0);
  for (std::size_t i = 0; i < o.count; ++i) {
    Rng rng(derive_seed(o.seed, i));
    const AlgebraPtr alg = (i % 3 == 2) ? random_algebra(rng, 3, o.dims.hi) : matrix_for(o.dims, i);
    const double t = ut(rng);
    const double p = (i % 3 == 0) ? 1.0 : (i % 3 == 1) ? 2.0 : 4.0;
    std::vector<Operator> xs, raw;
    std::vector<double> coeffs;
    for (int k = 0; k < 3; ++k) {
      xs.push_back(random_hermitian(alg, rng));
      raw.push_back(random_operator(alg, rng));
      coeffs.push_back(ua(rng));
    }
    if (!chebyshev_witness(xs, t, p).contracts_hold()) ++broken;
    if (!chebyshev_witness(raw, t, p, true).contracts_hold()) ++broken;
    if (!scaling_monotonicity_check(xs, coeffs, t).pass()) ++scaling_fail;
  }
  out.verdicts.push_back(make_verdict("chebyshev.contracts", true, broken == 0, static_cast<double>(broken), 0.0,
                                      fmt("%.0f witnesses", 2.0 * static_cast<double>(o.count))));
  out.verdicts.push_back(make_verdict("chebyshev.scaling", true, scaling_fail == 0, static_cast<double>(scaling_fail), 0.0));
  return out;
}

}  // namespace nclil
