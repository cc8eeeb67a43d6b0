#include "nclil/lil_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "nclil/conditional_expectation.hpp"
#include "nclil/inequalities.hpp"
#include "nclil/tensor.hpp"

namespace nclil {

namespace {

// Product ordering in double arithmetic. Exact (double-double) products
// would force an upward ulp nudge at nearly every step, and those compound.
bool product_ge(double a1, double b1, double a0, double b0) { return a1 * b1 >= a0 * b0; }

double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num == 0.0 ? 0.0 : kInf;
}

std::vector<WeightedValue> modulus_values(const Spectrum& spec) {
  auto vals = spec.weighted();
  for (auto& v : vals) v.value = std::abs(v.value);
  std::stable_sort(vals.begin(), vals.end(),
                   [](const WeightedValue& a, const WeightedValue& b) { return a.value > b.value; });
  return vals;
}

Operator modulus_cut(const Spectrum& spec, double level) {
  const Interval keep = Interval::closed(-level, level);
  return apply_function(spec, [&](double v) { return keep.contains(v) ? 1.0 : 0.0; });
}

std::vector<std::size_t> log_checkpoints(std::size_t lo, std::size_t hi, std::size_t count) {
  std::vector<std::size_t> out;
  if (hi < lo) return out;
  const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < count; ++i) {
    const double f = count == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(static_cast<std::size_t>(std::llround(std::exp(a + f * (b - a)))));
  }
  out.push_back(hi);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::erase_if(out, [&](std::size_t n) { return n < lo || n > hi; });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

AlphaPrime alpha_prime(std::span<const double> alpha, std::span<const double> beta) {
  const std::size_t n = alpha.size();
  if (n == 0 || beta.size() != n) throw std::invalid_argument("alpha_prime: need equal nonzero lengths");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(alpha[i] > 0.0) || !std::isfinite(alpha[i])) throw std::invalid_argument("alpha_prime: alpha must be positive");
    if (!(beta[i] > 0.0) || !std::isfinite(beta[i])) throw std::invalid_argument("alpha_prime: beta must be positive");
    if (i > 0 && beta[i] < beta[i - 1]) throw std::invalid_argument("alpha_prime: beta is not nondecreasing");
  }
  std::vector<double> bar(alpha.begin(), alpha.end());
  for (std::size_t i = n - 1; i-- > 0;) bar[i] = std::max(bar[i], bar[i + 1]);

  AlphaPrime out;
  out.values.resize(n);
  out.values[0] = bar[0];
  // alpha'_n beta_n is the running max of abar_m beta_m; working from that
  // product keeps ulp corrections from compounding along the recursion.
  double run = bar[0] * beta[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double prev = out.values[i];
    run = std::max(run, bar[i + 1] * beta[i + 1]);
    double c = std::max(bar[i + 1], run / beta[i + 1]);
    while (c < prev && !product_ge(c, beta[i + 1], prev, beta[i])) c = std::nextafter(c, kInf);
    out.values[i + 1] = std::min(c, prev);
  }

  out.dominates = out.nonincreasing = out.product_nondecreasing = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.values[i] < alpha[i]) out.dominates = false;
    if (i + 1 < n) {
      if (out.values[i + 1] > out.values[i]) out.nonincreasing = false;
      if (!product_ge(out.values[i + 1], beta[i + 1], out.values[i], beta[i])) out.product_nondecreasing = false;
    }
  }
  const std::size_t tail = (3 * n) / 4;
  out.tail_ratio = *std::max_element(alpha.begin() + static_cast<std::ptrdiff_t>(tail), alpha.end()) / bar[0];
  return out;
}

// ---------------------------------------------------------------------------

bool EpsilonPack::valid() const {
  if (!(delta > 0.0 && eps > 0.0 && eps < 1.0 && eps_prime > 0.0 && eps_prime < 1.0)) return false;
  if (!(eta > 1.0 && eta < 2.0)) return false;
  return 1.0 + delta_prime > eta * (1.0 + delta) / (1.0 - eps_prime) && exponent() > 1.0;
}

double EpsilonPack::exponent() const { return (1.0 + delta) * (1.0 + delta) / (1.0 + eps); }

EpsilonPack epsilon_solver(double delta_prime) {
  if (!(delta_prime > 0.0) || !std::isfinite(delta_prime))
    throw std::invalid_argument("epsilon_solver: delta' must be positive");
  EpsilonPack p;
  p.delta_prime = delta_prime;
  p.delta = delta_prime / 3.0;
  p.eps = ((1.0 + p.delta) * (1.0 + p.delta) - 1.0) / 2.0;
  while (p.eps >= 1.0) p.eps /= 2.0;
  p.eps_prime = std::min(delta_prime / 10.0, p.delta / (1.0 + delta_prime));
  const double eta_max = (1.0 + delta_prime) * (1.0 - p.eps_prime) / (1.0 + p.delta);
  p.eta = std::min({1.0 + delta_prime / 10.0, 1.0 + (eta_max - 1.0) / 2.0, 2.0 - 1e-6});
  if (!p.valid()) throw std::logic_error("epsilon_solver: no feasible pack");
  return p;
}

// ---------------------------------------------------------------------------

bool BlockScheme::boundaries_hold(std::span<const double> s2_track) const {
  if (k.empty() || k[0] != 0) return false;
  for (std::size_t n = 1; n < k.size(); ++n) {
    const double level = std::pow(eta2, static_cast<double>(n));
    if (k[n] < k[n - 1] || k[n] + 1 >= s2_track.size()) return false;
    if (!(s2_track[k[n] + 1] >= level) || !(s2_track[k[n]] < level)) return false;
  }
  return true;
}

BlockScheme blocks_squared(std::span<const double> s2, double eta2, double eps_prime) {
  if (!(eta2 > 1.0 && eta2 < 4.0)) throw std::invalid_argument("blocks: eta must lie in (1, 2)");
  if (s2.size() < 2) throw std::invalid_argument("blocks: need s2_0 .. s2_N with N >= 1");
  for (std::size_t j = 1; j < s2.size(); ++j)
    if (s2[j] < s2[j - 1]) throw std::invalid_argument("blocks: s2 is not nondecreasing");

  BlockScheme out;
  out.eta2 = eta2;
  out.horizon_target = (1.0 - eps_prime) * (1.0 - eps_prime) / eta2;
  out.k.push_back(0);
  const std::size_t N = s2.size() - 1;
  std::size_t j = 0;
  for (std::size_t n = 1;; ++n) {
    const double level = std::pow(eta2, static_cast<double>(n));
    while (j < N && s2[j + 1] < level) ++j;
    if (j >= N) break;
    out.k.push_back(j);
  }
  if (out.k.size() < 2) throw std::invalid_argument("blocks: s2 never reaches eta^2 within the horizon");
  for (std::size_t kn : out.k) {
    out.s2.push_back(s2[kn]);
    out.u.push_back(log_scale(s2[kn]));
  }
  auto weight = [&](std::size_t idx) { return s2[idx] * iterated_log(s2[idx]); };
  for (std::size_t n = 1; n + 1 < out.k.size(); ++n)
    out.horizon_ratio.push_back(safe_ratio(weight(out.k[n] + 1), weight(out.k[n + 1])));
  if (!out.horizon_ratio.empty()) {
    std::size_t start = out.horizon_ratio.size();
    while (start > 0 && out.horizon_ratio[start - 1] >= out.horizon_target) --start;
    if (start < out.horizon_ratio.size()) out.horizon_start = start + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(LilRegime r) {
  switch (r) {
    case LilRegime::Classical: return "classical";
    case LilRegime::Tensor: return "tensor";
    case LilRegime::Gue: return "gue";
  }
  return "?";
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile: q must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

struct Snapshot {
  std::size_t n;
  double s2;
  Operator x;
};

void fill_rows(LilReport& report, const std::vector<Snapshot>& snaps) {
  const double budget = report.config.budget;
  std::vector<Spectrum> specs;
  std::vector<std::vector<WeightedValue>> mods;
  specs.reserve(snaps.size());
  for (const auto& s : snaps) {
    specs.push_back(herm_spectrum(s.x));
    mods.push_back(modulus_values(specs.back()));
  }
  for (std::size_t j = 0; j < snaps.size(); ++j) {
    std::vector<Operator> cuts;
    cuts.reserve(j + 1);
    for (std::size_t i = 0; i <= j; ++i) {
      const double b = std::ldexp(budget, -static_cast<int>(j - i + 1));
      cuts.push_back(modulus_cut(specs[i], mu_from_values(mods[i], b)));
    }
    const Operator e = projection_meet(cuts);
    CheckpointRow row;
    row.n = snaps[j].n;
    row.s2 = snaps[j].s2;
    row.u = log_scale(row.s2);
    const double den = std::sqrt(row.s2) * row.u;
    row.op_ratio = safe_ratio(op_norm(snaps[j].x), den);
    row.snumber_ratio = safe_ratio(mu_from_values(mods[j], budget), den);
    row.witness_ratio = safe_ratio(op_norm(snaps[j].x * e), den);
    row.deficit = std::max(0.0, 1.0 - real_trace(e));
    report.rows.push_back(row);
  }
  for (const auto& r : report.rows) {
    report.max_op_ratio = std::max(report.max_op_ratio, r.op_ratio);
    report.max_snumber_ratio = std::max(report.max_snumber_ratio, r.snumber_ratio);
    report.max_witness_ratio = std::max(report.max_witness_ratio, r.witness_ratio);
    if (!(r.snumber_ratio <= r.witness_ratio + 1e-9 && r.witness_ratio <= r.op_ratio + 1e-9))
      report.ordering_holds = false;
    if (!(r.deficit <= budget)) report.certificates_hold = false;
  }
}

std::vector<std::size_t> resolve_checkpoints(const LilConfig& c) {
  if (c.checkpoints.empty()) return log_checkpoints(1, c.steps, 16);
  std::vector<std::size_t> out = c.checkpoints;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.front() == 0 || out.back() > c.steps)
    throw std::invalid_argument("lil_run: checkpoints must lie in [1, steps]");
  return out;
}

void run_classical(LilReport& report, const std::vector<std::size_t>& checkpoints) {
  const LilConfig& c = report.config;
  if (c.atoms == 0 || c.atoms > (1u << 16)) throw std::invalid_argument("lil_run: atoms must lie in [1, 65536]");
  if (c.steps > 100000000) throw std::invalid_argument("lil_run: classical horizon cap is 1e8");
  const AlgebraPtr alg = TracialAlgebra::uniform_atoms(c.atoms);
  RademacherEnsemble ens(c.atoms, c.seed);
  std::vector<double> best(c.atoms, 0.0);
  std::vector<Snapshot> snaps;
  std::size_t next = 0;
  for (std::size_t n = 1; n <= c.steps; ++n) {
    ens.step();
    const auto& sums = ens.sums();
    if (n >= c.window_start) {
      const double nn = static_cast<double>(n);
      const double inv = 1.0 / std::sqrt(nn * iterated_log(nn));
      for (std::size_t a = 0; a < c.atoms; ++a)
        best[a] = std::max(best[a], std::abs(static_cast<double>(sums[a])) * inv);
    }
    if (next < checkpoints.size() && checkpoints[next] == n) {
      std::vector<double> v(sums.begin(), sums.end());
      snaps.push_back({n, static_cast<double>(n), Operator::diagonal(alg, v)});
      ++next;
    }
  }
  if (c.window_start <= c.steps) {
    report.atom_maxima = best;
    report.median = quantile(best, 0.5);
    report.p99 = quantile(best, 0.99);
  }
  fill_rows(report, snaps);
}

void run_tensor(LilReport& report, const std::vector<std::size_t>& checkpoints) {
  const LilConfig& c = report.config;
  if (c.norm < 0.0) throw std::invalid_argument("lil_run: norm must be >= 0");
  TensorHermitianOptions o;
  o.steps = c.steps;
  o.factor_dim = c.factor_dim;
  o.seed = c.seed;
  o.law = c.law;
  o.norm = c.norm > 0.0 ? c.norm : 1.0;
  o.commutative = c.commutative;
  Martingale m = gen_tensor_hermitian(o);
  if (c.norm == 0.0) {
    std::vector<Operator> zeros(c.steps, Operator::zero(m.algebra()));
    m = Martingale::from_differences(m.filtration_ptr(), std::move(zeros));
  }
  const ScaleTrack sc = bracket(m);
  std::vector<Snapshot> snaps;
  for (std::size_t n : checkpoints) snaps.push_back({n, sc.s2[n], m.x(n)});
  fill_rows(report, snaps);
}

void run_gue(LilReport& report, const std::vector<std::size_t>& checkpoints) {
  const LilConfig& c = report.config;
  if (static_cast<double>(c.steps) * c.dim * c.dim > 5e8) throw std::invalid_argument("lil_run: gue budget is N d^2 <= 5e8");
  GueStream stream(c.dim, c.seed);
  const AlgebraPtr alg = TracialAlgebra::matrix(c.dim);
  std::vector<Snapshot> snaps;
  std::size_t next = 0;
  for (std::size_t n = 1; n <= c.steps && next < checkpoints.size(); ++n) {
    stream.step();
    if (checkpoints[next] == n) {
      snaps.push_back({n, static_cast<double>(n), Operator(alg, {stream.current()})});
      ++next;
    }
  }
  fill_rows(report, snaps);
}

}  // namespace

LilReport lil_run(const LilConfig& config) {
  if (config.steps == 0) throw std::invalid_argument("lil_run: steps must be >= 1");
  if (!(config.budget > 0.0 && config.budget < 1.0)) throw std::invalid_argument("lil_run: budget must lie in (0, 1)");
  LilReport report;
  report.config = config;
  const auto checkpoints = resolve_checkpoints(config);
  switch (config.regime) {
    case LilRegime::Classical: run_classical(report, checkpoints); break;
    case LilRegime::Tensor: run_tensor(report, checkpoints); break;
    case LilRegime::Gue: run_gue(report, checkpoints); break;
  }
  return report;
}

std::vector<LilReport> lil_sweep(const LilConfig& config, std::span<const std::uint64_t> seeds, unsigned threads) {
  std::vector<LilReport> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, seeds.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        LilConfig c = config;
        c.seed = seeds[i];
        out[i] = lil_run(c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---------------------------------------------------------------------------

bool HwReport::ok() const {
  return envelope_holds && z_bounded && w_budget_holds && max_resum_error <= 1e-10 && max_cross_error <= 1e-12;
}

HwReport hw_pipeline(const Operator& h, const HwConfig& config) {
  if (!h.is_self_adjoint()) throw std::invalid_argument("hw_pipeline: law is not self-adjoint");
  if (config.steps == 0) throw std::invalid_argument("hw_pipeline: steps must be >= 1");
  if (config.tower_steps > 12) throw std::invalid_argument("hw_pipeline: tower_steps <= 12");
  if (!(config.e > 0.0)) throw std::invalid_argument("hw_pipeline: e must be positive");
  HwReport out;
  out.config = config;
  out.l2_norm_sq = real_trace(h * h);
  if (out.l2_norm_sq > 1.0 + 1e-12) throw std::invalid_argument("hw_pipeline: law violates ||y||_2 <= 1");

  double z_sum = 0.0;
  for (std::size_t k = 1; k <= config.steps; ++k) {
    const HwParts parts = hw_split(h, k, config.e);
    const double kk = static_cast<double>(k);
    HwStep s;
    s.k = k;
    s.c1 = parts.c1;
    s.c2 = parts.c2;
    s.yprime_norm = op_norm(parts.yprime);
    s.envelope = config.e * std::sqrt(kk) / log_scale(kk);
    s.z_l2sq = real_trace(parts.z * parts.z);
    s.w_support = real_trace(spectral_indicator(h, Interval::open_above(parts.c2), true));
    s.resum_error = op_norm(parts.yprime + parts.z + parts.w - h);
    s.cross_error = std::max({op_norm(parts.small_raw * parts.mid_raw), op_norm(parts.small_raw * parts.large_raw),
                              op_norm(parts.mid_raw * parts.large_raw)});
    if (s.yprime_norm > s.envelope * (1.0 + 1e-9)) out.envelope_holds = false;
    z_sum += s.z_l2sq / (kk * iterated_log(kk));
    out.z_partial.push_back(z_sum);
    out.w_budget += s.w_support;
    out.max_resum_error = std::max(out.max_resum_error, s.resum_error);
    out.max_cross_error = std::max(out.max_cross_error, s.cross_error);
    out.steps.push_back(s);
  }
  // the window is widened by the interval snap tolerance so it covers every k
  // that hw_split assigns to the middle part
  for (const auto& v : herm_spectrum(h).weighted())
    out.z_bound += v.weight * v.multiplicity * v.value * v.value * g_value(config.e / 2.0, std::abs(v.value), 1000000000, 4e-12).value;
  out.z_bounded = z_sum <= out.z_bound * (1.0 + 1e-9) + 1e-15;
  out.w_budget_holds = out.w_budget <= out.l2_norm_sq * (1.0 + 1e-12);

  // The ratio series is materialized only while the tower stays at total
  // dimension <= 256; dense norms beyond that are too slow to be useful here.
  std::size_t tower_steps = 0;
  for (std::size_t dim = 1; tower_steps < config.tower_steps && dim * h.algebra()->total_dim() <= 256; ++tower_steps)
    dim *= h.algebra()->total_dim();
  if (tower_steps > 0) {
    std::vector<AlgebraPtr> factors(tower_steps, h.algebra());
    const TensorTower tower = tensor_filtration(factors);
    Operator total = Operator::zero(tower.algebra), yp = total, z = total, w = total;
    for (std::size_t k = 1; k <= tower_steps; ++k) {
      const HwParts parts = hw_split(h, k, config.e);
      auto lift = [&](const Operator& a) { return embed_factor(tower.algebra, tower.factors, k - 1, a); };
      total += lift(h);
      yp += lift(parts.yprime);
      z += lift(parts.z);
      w += lift(parts.w);
      const double s2 = static_cast<double>(k) * out.l2_norm_sq;
      const double den = std::sqrt(s2) * log_scale(s2);
      out.ratios.push_back({k, safe_ratio(op_norm(total), den), safe_ratio(op_norm(yp), den),
                            safe_ratio(op_norm(z), den), safe_ratio(op_norm(w), den)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

GValue g_value(double e, double t, std::size_t window_cap, double slack) {
  if (!(e > 0.0)) throw std::invalid_argument("g_value: e must be positive");
  GValue out;
  if (!(t > 0.0)) return out;
  if (!(slack >= 0.0)) throw std::invalid_argument("g_value: slack must be >= 0");
  const double t2 = t * t;
  std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t2 * (1.0 - slack))));
  out.lo = n;
  long double sum = 0.0L;
  for (;; ++n) {
    const double nn = static_cast<double>(n);
    const double L = iterated_log(nn);
    if (!(t2 * L * (1.0 + slack) > e * e * nn)) break;
    if (n > window_cap) throw std::runtime_error("g_value: window exceeds the cap");
    sum += 1.0L / (static_cast<long double>(nn) * L);
  }
  out.hi = n - 1;
  out.value = static_cast<double>(sum);
  return out;
}

GScan g_scan(double e, std::span<const double> t_grid, std::size_t window_cap) {
  GScan out;
  for (double t : t_grid) {
    out.t.push_back(t);
    out.values.push_back(g_value(e, t, window_cap));
    const double v = out.values.back().value;
    if (!std::isfinite(v)) out.finite = false;
    out.max = std::max(out.max, v);
  }
  std::vector<double> xs, ys;
  for (std::size_t i = t_grid.size() / 2; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) continue;
    xs.push_back(std::log(t_grid[i]));
    ys.push_back(out.values[i].value);
  }
  if (xs.size() >= 2 && out.max > 0.0) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx > 0.0) out.trend = sxy / sxx / out.max;
  }
  return out;
}

// ---------------------------------------------------------------------------

KroneckerReport kronecker_diag(std::span<const Operator> x_terms, std::span<const double> alphas, double budget) {
  const std::size_t N = x_terms.size();
  if (N == 0 || alphas.size() != N) throw std::invalid_argument("kronecker_diag: need equal nonzero lengths");
  if (!(budget > 0.0 && budget < 1.0)) throw std::invalid_argument("kronecker_diag: budget must lie in (0, 1)");
  for (std::size_t i = 0; i < N; ++i) {
    if (!(alphas[i] > 0.0)) throw std::invalid_argument("kronecker_diag: alphas must be positive");
    if (i > 0 && alphas[i] < alphas[i - 1]) throw std::invalid_argument("kronecker_diag: alphas must be nondecreasing");
    if (!x_terms[i].is_self_adjoint()) throw std::invalid_argument("kronecker_diag: terms must be self-adjoint");
  }
  const AlgebraPtr alg = x_terms[0].algebra();
  Operator limit = Operator::zero(alg);
  for (std::size_t i = 0; i < N; ++i) limit += x_terms[i] * (1.0 / alphas[i]);

  const std::size_t half = std::max<std::size_t>(1, N / 2);
  const auto tail = log_checkpoints(half, N, 16);
  std::vector<Operator> cuts;
  {
    Operator a = Operator::zero(alg);
    std::size_t next = 0;
    for (std::size_t n = 1; n <= N && next < tail.size(); ++n) {
      a += x_terms[n - 1] * (1.0 / alphas[n - 1]);
      if (tail[next] != n) continue;
      const Spectrum spec = herm_spectrum(a - limit);
      const double b = std::ldexp(budget, -static_cast<int>(next + 1));
      cuts.push_back(modulus_cut(spec, mu_from_values(modulus_values(spec), b)));
      ++next;
    }
  }
  KroneckerReport out;
  const Operator e = projection_meet(cuts);
  out.deficit = std::max(0.0, 1.0 - real_trace(e));
  Operator a = Operator::zero(alg), s = Operator::zero(alg);
  for (std::size_t n = 1; n <= N; ++n) {
    a += x_terms[n - 1] * (1.0 / alphas[n - 1]);
    s += x_terms[n - 1];
    out.weighted_norms.push_back(op_norm((a - limit) * e));
    out.average_norms.push_back(op_norm(s * e) / alphas[n - 1]);
    if (n >= half) out.cauchy_tail = std::max(out.cauchy_tail, out.weighted_norms.back());
  }
  out.average_start = out.average_norms[half - 1];
  out.average_end = out.average_norms.back();
  return out;
}

double bc_envelope(const EpsilonPack& pack, std::size_t n) {
  if (n == 0) throw std::invalid_argument("bc_envelope: n must be >= 1");
  return 8.0 * std::pow(2.0 * std::log(pack.eta) * static_cast<double>(n), -pack.exponent());
}

double section_chain_bound(const EpsilonPack& pack, double s2) {
  return 8.0 * std::exp(-pack.exponent() * iterated_log(s2));
}

BcReport bc_budget(std::span<const double> block_deficits, const EpsilonPack& pack, std::size_t first_block) {
  if (first_block == 0) throw std::invalid_argument("bc_budget: blocks are numbered from 1");
  BcReport out;
  out.exponent = pack.exponent();
  out.summable = out.exponent > 1.0;
  double ds = 0.0, es = 0.0;
  for (std::size_t i = 0; i < block_deficits.size(); ++i) {
    const double env = bc_envelope(pack, first_block + i);
    out.deficits.push_back(block_deficits[i]);
    out.envelope.push_back(env);
    ds += block_deficits[i];
    es += env;
    out.deficit_partial.push_back(ds);
    out.envelope_partial.push_back(es);
    if (!(block_deficits[i] <= env)) out.under_envelope = false;
  }
  return out;
}

std::vector<BlockDeficit> block_deficits(const Martingale& m, const EpsilonPack& pack) {
  if (!m.self_adjoint()) throw std::invalid_argument("block_deficits: martingale is not self-adjoint");
  const ScaleTrack sc = bracket(m);
  const BlockScheme scheme = blocks(sc.s2, pack.eta, pack.eps_prime);
  double M = 0.0;
  for (const auto& d : m.differences()) M = std::max(M, op_norm(d));
  const double lam_max = 3.0 * pack.eps / (1.0 + pack.eps);
  std::vector<BlockDeficit> out;
  for (std::size_t n = 1; n + 1 < scheme.k.size(); ++n) {
    BlockDeficit b;
    b.n = n;
    b.k_lo = scheme.k[n];
    b.k_hi = scheme.k[n + 1];
    const double s2 = sc.s2[b.k_hi];
    b.threshold = std::sqrt(2.0) * (1.0 + pack.delta) * std::sqrt(s2) * sc.u[b.k_hi];
    b.lambda = safe_ratio(b.threshold, (1.0 + pack.eps) * s2);
    b.gate = b.lambda * M <= lam_max;
    if (b.k_hi > b.k_lo && b.threshold > 0.0) {
      std::vector<Operator> xs(m.values().begin() + static_cast<std::ptrdiff_t>(b.k_lo + 1),
                               m.values().begin() + static_cast<std::ptrdiff_t>(b.k_hi + 1));
      b.observed = chebyshev_witness(xs, b.threshold, 2.0).deficit;
    }
    b.certified = section_chain_bound(pack, s2);
    b.envelope = bc_envelope(pack, n);
    out.push_back(b);
  }
  return out;
}

}  // namespace nclil
