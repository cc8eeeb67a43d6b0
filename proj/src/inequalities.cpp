#include "nclil/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nclil/conditional_expectation.hpp"

namespace nclil {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::HypothesisViolated: return "hypothesis-violated";
    case CheckStatus::OutOfRange: return "out-of-range";
  }
  return "?";
}

const char* to_string(Exp2Mode m) { return m == Exp2Mode::AsStated ? "as-stated" : "corrected"; }

IneqReport make_report(std::string id, std::string instance, double lhs, double rhs, double tol) {
  IneqReport r;
  r.id = std::move(id);
  r.instance = std::move(instance);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  const double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
  r.rel_slack = r.slack / scale;
  r.status = (r.slack >= -tol * scale) ? CheckStatus::Pass : CheckStatus::Fail;
  return r;
}

BatteryReport run_battery(std::string id, std::size_t count, std::uint64_t seed,
                          const std::function<IneqReport(std::size_t, Rng&)>& instance, unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::vector<std::optional<IneqReport>> results(count);
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < count; i += threads) {
        Rng rng(derive_seed(seed, i));
        results[i] = instance(i, rng);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  BatteryReport out;
  out.id = std::move(id);
  out.count = count;
  for (auto& r : results) {
    if (!r->pass()) ++out.failures;
    if (!out.worst || r->rel_slack < out.min_rel_slack) {
      out.min_rel_slack = r->rel_slack;
      out.worst = std::move(*r);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double scalar_F(double s) {
  if (std::abs(s) < 1e-4) return s * s * (0.5 + s * (1.0 / 6 + s * (1.0 / 24 + s / 120)));
  return std::expm1(s) - s;
}

double scalar_g(double s) {
  if (std::abs(s) < 1e-4) return 0.5 + s * (1.0 / 6 + s * (1.0 / 24 + s / 120));
  return scalar_F(s) / (s * s);
}

// ---------------------------------------------------------------------------

namespace {

void require_self_adjoint(const Operator& x, const char* who) {
  if (!x.is_self_adjoint()) throw std::invalid_argument(std::string(who) + ": operator is not self-adjoint");
}

// Per block of a: eigenvalues, U* e^b U and U* e^c U.
struct IgtBlocks {
  std::vector<double> weight;  // w_i / d_i
  std::vector<Eigen::VectorXd> a;
  std::vector<Matrix> x, y;
};

IgtBlocks igt_blocks(const Operator& a, const Operator& b, const Operator& c) {
  require_self_adjoint(a, "igt_rhs");
  require_self_adjoint(b, "igt_rhs");
  require_self_adjoint(c, "igt_rhs");
  require_same_algebra(a.algebra(), b.algebra());
  require_same_algebra(a.algebra(), c.algebra());
  const Spectrum sa = herm_spectrum(a);
  const Operator eb = exp_herm(b);
  const Operator ec = exp_herm(c);
  IgtBlocks out;
  for (std::size_t i = 0; i < a.num_blocks(); ++i) {
    const auto& blk = a.algebra()->block(i);
    const Matrix& u = sa.blocks()[i].vectors;
    out.weight.push_back(blk.weight / blk.dim);
    out.a.push_back(sa.blocks()[i].values);
    out.x.push_back(u.adjoint() * eb.block(i) * u);
    out.y.push_back(u.adjoint() * ec.block(i) * u);
  }
  return out;
}

// int_0^inf (e^{-ai} + t)^{-1} (e^{-aj} + t)^{-1} dt.
double kernel_entry(double ai, double aj) {
  const double hi = std::max(ai, aj);
  const double delta = std::abs(ai - aj);
  if (delta < 1e-10) return std::exp(hi - 0.5 * delta);
  return delta * std::exp(hi) / std::expm1(delta);
}

}  // namespace

GtReport gt_gap(const Operator& a, const Operator& b) {
  require_self_adjoint(a, "gt_gap");
  require_self_adjoint(b, "gt_gap");
  const double lhs = real_trace(exp_herm(a + b));
  const Operator ea = exp_herm(a);
  const Operator eb = exp_herm(b);
  const double rhs = trace(ea * eb).real();
  const Operator half = exp_herm(a * 0.5);
  const double sym = real_trace(half * eb * half);
  return GtReport{make_report("golden-thompson", "", lhs, rhs), sym};
}

IgtValue igt_rhs(const Operator& a, const Operator& b, const Operator& c, IgtMode mode) {
  const IgtBlocks blk = igt_blocks(a, b, c);
  IgtValue out;
  if (mode == IgtMode::Kernel) {
    double total = 0.0;
    for (std::size_t i = 0; i < blk.a.size(); ++i) {
      const auto& av = blk.a[i];
      const Eigen::Index d = av.size();
      cplx s = 0.0;
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index q = 0; q < d; ++q) s += blk.y[i](q, r) * blk.x[i](r, q) * kernel_entry(av(r), av(q));
      total += blk.weight[i] * s.real();
    }
    out.value = total;
    return out;
  }
  // t = u / (1 - u); (e^{-a} + t)^{-1} / (1 - u) = ((1 - u) e^{-a} + u)^{-1}.
  std::vector<Eigen::VectorXd> ea;
  for (const auto& av : blk.a) ea.push_back((-av.array()).exp().matrix());
  auto integrand = [&](double u) {
    double total = 0.0;
    for (std::size_t i = 0; i < blk.a.size(); ++i) {
      const Eigen::VectorXd q = ((1.0 - u) * ea[i].array() + u).inverse().matrix();
      const Eigen::Index d = q.size();
      cplx s = 0.0;
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c2 = 0; c2 < d; ++c2) s += blk.y[i](c2, r) * blk.x[i](r, c2) * (q(r) * q(c2));
      total += blk.weight[i] * s.real();
    }
    return total;
  };
  double err = 0.0;
  out.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 20, 1e-13, &err);
  out.error_estimate = err;
  out.converged = err <= 1e-9 * std::max(1.0, std::abs(out.value));
  return out;
}

IneqReport igt_gap(const Operator& a, const Operator& b, const Operator& c, double tol) {
  const double lhs = real_trace(exp_herm(a + b + c));
  const double rhs = igt_rhs(a, b, c, IgtMode::Kernel).value;
  return make_report("improved-golden-thompson", "", lhs, rhs, tol);
}

// ---------------------------------------------------------------------------

double exp_bound1(double M, double D2, double lam) {
  if (!(M > 0.0)) throw std::invalid_argument("exp_bound1: M must be positive");
  return std::exp(scalar_F(lam * M) * D2 / (M * M));
}

ExpHypotheses exp_hypotheses(const Martingale& m, double M, double D2) {
  ExpHypotheses h;
  for (const auto& d : m.differences()) h.max_diff_norm = std::max(h.max_diff_norm, op_norm(d));
  const Operator br = bracket_operator(m, m.steps());
  h.bracket_max = m.steps() == 0 ? 0.0 : herm_spectrum(br).max();
  h.holds = m.self_adjoint() && h.max_diff_norm <= M * (1 + 1e-12) && h.bracket_max <= D2 * (1 + 1e-12) + 1e-15;
  return h;
}

namespace {

// tau(e^{lam x}) for each lam from one eigendecomposition.
std::vector<double> mgf_on_grid(const Operator& x, std::span<const double> lams) {
  const auto vals = herm_spectrum(x).weighted();
  std::vector<double> out;
  out.reserve(lams.size());
  for (double lam : lams) {
    double s = 0.0;
    for (const auto& v : vals) s += v.weight * v.multiplicity * std::exp(lam * v.value);
    out.push_back(s);
  }
  return out;
}

std::string lam_label(double lam) {
  std::ostringstream os;
  os.precision(6);
  os << "lam=" << lam;
  return os.str();
}

}  // namespace

std::vector<IneqReport> exp_check1(const Martingale& m, double M, double D2, std::span<const double> lam_grid) {
  const ExpHypotheses h = exp_hypotheses(m, M, D2);
  std::vector<IneqReport> out;
  if (!h.holds) {
    for (double lam : lam_grid) {
      IneqReport r;
      r.id = "exp-ineq-1";
      r.instance = lam_label(lam);
      r.status = CheckStatus::HypothesisViolated;
      out.push_back(r);
    }
    return out;
  }
  const auto lhs = mgf_on_grid(m.x(m.steps()), lam_grid);
  for (std::size_t i = 0; i < lam_grid.size(); ++i)
    out.push_back(make_report("exp-ineq-1", lam_label(lam_grid[i]), lhs[i], exp_bound1(M, D2, lam_grid[i])));
  return out;
}

Exp2Bound exp_bound2(double M, double D2, double lam, double eps, Exp2Mode mode) {
  if (!(M > 0.0)) throw std::invalid_argument("exp_bound2: M must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("exp_bound2: eps must lie in (0, 1]");
  Exp2Bound b;
  b.lam_max = mode == Exp2Mode::AsStated ? 3.0 * eps / M : 3.0 * eps / ((1.0 + eps) * M);
  b.in_range = lam >= 0.0 && lam <= b.lam_max * (1 + 1e-12);
  b.rhs = std::exp(0.5 * (1.0 + eps) * lam * lam * D2);
  return b;
}

std::vector<IneqReport> exp_check2(const Martingale& m, double M, double D2, std::span<const double> lam_grid,
                                   double eps, Exp2Mode mode) {
  const ExpHypotheses h = exp_hypotheses(m, M, D2);
  const std::string id = std::string("exp-ineq-2-") + to_string(mode);
  const auto lhs = h.holds ? mgf_on_grid(m.x(m.steps()), lam_grid) : std::vector<double>(lam_grid.size(), 0.0);
  std::vector<IneqReport> out;
  for (std::size_t i = 0; i < lam_grid.size(); ++i) {
    const Exp2Bound b = exp_bound2(M, D2, lam_grid[i], eps, mode);
    IneqReport r;
    if (!h.holds) {
      r.id = id;
      r.instance = lam_label(lam_grid[i]);
      r.status = CheckStatus::HypothesisViolated;
    } else {
      r = make_report(id, lam_label(lam_grid[i]), lhs[i], b.rhs);
      if (!b.in_range) r.status = CheckStatus::OutOfRange;
    }
    out.push_back(r);
  }
  return out;
}

double twopoint_mgf(const TwoPointLaw& law, double lam) {
  return law.p * std::exp(lam * law.high()) + (1.0 - law.p) * std::exp(lam * law.low());
}

IneqReport exp2_counterexample_search(double eps, double M, std::size_t p_points, std::size_t lam_points) {
  if (p_points < 2 || lam_points < 2) throw std::invalid_argument("exp2_counterexample_search: grid too small");
  const double lam_max = exp_bound2(M, 1.0, 0.0, eps, Exp2Mode::AsStated).lam_max;
  std::optional<IneqReport> worst;
  for (std::size_t i = 0; i < p_points; ++i) {
    // p from 1e-3 to 1/2, log spaced
    const double p = std::exp(std::log(1e-3) + (std::log(0.5) - std::log(1e-3)) * i / (p_points - 1));
    const TwoPointLaw law = gen_skewed_twopoint(p, M);
    for (std::size_t j = 0; j < lam_points; ++j) {
      const double lam = lam_max * (0.5 + 0.5 * j / (lam_points - 1));
      const double lhs = twopoint_mgf(law, lam);
      const double rhs = exp_bound2(M, law.variance(), lam, eps, Exp2Mode::AsStated).rhs;
      std::ostringstream os;
      os.precision(6);
      os << "p=" << p << " M=" << M << " eps=" << eps << " lam=" << lam;
      IneqReport r = make_report("exp-ineq-2-as-stated-search", os.str(), lhs, rhs);
      if (!worst || r.rel_slack < worst->rel_slack) worst = std::move(r);
    }
  }
  return *worst;
}

// ---------------------------------------------------------------------------

IneqReport poly_exp_bound(double u, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("poly_exp_bound: p must be >= 1");
  const double lhs = std::pow(std::abs(u), p);
  const double rhs = std::exp(p * std::log(p) - p) * 2.0 * std::cosh(u);
  std::ostringstream os;
  os << "u=" << u << " p=" << p;
  return make_report("poly-exp", os.str(), lhs, rhs, 1e-12);
}

IneqReport poly_exp_grid(double p, std::span<const double> us) {
  if (us.empty()) throw std::invalid_argument("poly_exp_grid: empty grid");
  std::optional<IneqReport> worst;
  for (double u : us) {
    IneqReport r = poly_exp_bound(u, p);
    if (!worst || r.rel_slack < worst->rel_slack) worst = std::move(r);
  }
  return *worst;
}

bool WitnessTail::contracts_hold() const {
  for (double n : norms)
    if (n > t * (1 + 1e-9)) return false;
  return deficit <= bound * (1 + 1e-12) + 1e-15;
}

WitnessTail chebyshev_witness(std::span<const Operator> xs, double t, double p, bool dilate_inputs) {
  if (xs.empty()) throw std::invalid_argument("chebyshev_witness: empty sequence");
  if (!(t > 0.0)) throw std::invalid_argument("chebyshev_witness: t must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("chebyshev_witness: p must be >= 1");
  std::vector<Operator> ops;
  ops.reserve(xs.size());
  AlgebraPtr doubled;
  for (const auto& x : xs) {
    if (dilate_inputs) {
      if (!doubled) doubled = doubled_algebra(x.algebra());
      ops.push_back(dilate_operator(doubled, x));
    } else {
      require_self_adjoint(x, "chebyshev_witness");
      ops.push_back(x);
    }
  }
  std::vector<Operator> cuts;
  cuts.reserve(ops.size());
  double bound = 0.0;
  for (const auto& x : ops) {
    cuts.push_back(spectral_indicator(x, Interval::closed(-t, t)));
    bound += std::pow(lp_norm(x, p) / t, p);
  }
  Operator e = projection_meet(cuts);
  const double deficit = std::max(0.0, 1.0 - real_trace(e));
  std::vector<double> norms;
  norms.reserve(ops.size());
  for (const auto& x : ops) norms.push_back(op_norm(x * e));
  return WitnessTail{std::move(e), t, deficit, bound, std::move(norms)};
}

IneqReport scaling_monotonicity_check(std::span<const Operator> xs, std::span<const double> coeffs, double t) {
  if (xs.size() != coeffs.size()) throw std::invalid_argument("scaling_monotonicity_check: size mismatch");
  for (double a : coeffs)
    if (!(a >= 1.0)) throw std::invalid_argument("scaling_monotonicity_check: coefficients must be >= 1");
  std::vector<Operator> scaled;
  scaled.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) scaled.push_back(xs[i] * coeffs[i]);
  const double base = chebyshev_witness(xs, t, 1.0).deficit;
  const double grown = chebyshev_witness(scaled, t, 1.0).deficit;
  return make_report("scaling-monotonicity", "", base, grown, 1e-12);
}

}  // namespace nclil
