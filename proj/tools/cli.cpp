#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "nclil/io.hpp"
#include "nclil/lil_lab.hpp"
#include "nclil/random.hpp"
#include "nclil/suites.hpp"

namespace nclil {

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Kind { Unsigned, Real, Text, Flag, UnsignedList };

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + text + "'");
}

// Options of one leaf command. Values resolve as defaults, then the config
// file, then flags given on the command line.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config or a manifest from a previous run");
    app_->add_option("--out", out_dir_, "output directory (CSV / JSON / manifest)");
    app_->add_flag("--json", json_, "machine-readable output on stdout");
  }

  void add(const std::string& key, Kind kind, Json def, const std::string& help) {
    auto e = std::make_unique<Entry>();
    e->key = key;
    e->kind = kind;
    e->def = std::move(def);
    e->help = help;
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    e->opt = kind == Kind::Flag ? app_->add_flag(flag, e->flag, help) : app_->add_option(flag, e->text, help);
    entries_.push_back(std::move(e));
  }

  /// JSON Schema (draft-07) of the config file this command accepts.
  Json schema(const std::string& command) const {
    Json props = Json::object();
    const Json count{{"type", "integer"}, {"minimum", 0}};
    for (const auto& e : entries_) {
      Json p;
      switch (e->kind) {
        case Kind::Unsigned: p = count; break;
        case Kind::Real: p = Json{{"type", "number"}}; break;
        case Kind::Text: p = Json{{"type", "string"}}; break;
        case Kind::Flag: p = Json{{"type", "boolean"}}; break;
        case Kind::UnsignedList:
          p = Json{{"oneOf", Json::array({count, Json{{"type", "array"}, {"items", count}}})}};
          break;
      }
      p["default"] = e->def;
      p["description"] = e->help;
      props[e->key] = std::move(p);
    }
    return Json{{"$schema", "http://json-schema.org/draft-07/schema#"},
                {"title", "nclil " + command},
                {"type", "object"},
                {"additionalProperties", false},
                {"properties", std::move(props)}};
  }

  const std::string& config_path() const { return config_path_; }
  const std::string& out_dir() const { return out_dir_; }
  bool json() const { return json_; }

  Json resolve(const std::string& command) const {
    Json out = Json::object();
    for (const auto& e : entries_) out[e->key] = e->def;
    if (!config_path_.empty()) {
      Json file;
      try {
        file = Json::parse(read_file(config_path_));
      } catch (const Json::exception& ex) {
        throw ConfigError("config: " + std::string(ex.what()));
      } catch (const std::runtime_error& ex) {
        throw ConfigError(ex.what());
      }
      if (!file.is_object()) throw ConfigError("config: top level must be an object");
      if (file.contains("config_hash")) file = unwrap_manifest(file, command);
      for (const auto& [k, v] : file.items()) {
        const Entry* e = find(k);
        if (!e) throw ConfigError("config: unknown key '" + k + "' for " + command);
        out[k] = check(*e, v);
      }
    }
    for (const auto& e : entries_)
      if (e->opt->count() > 0) out[e->key] = from_text(*e);
    return out;
  }

 private:
  struct Entry {
    std::string key;
    Kind kind;
    Json def;
    std::string help;
    CLI::Option* opt = nullptr;
    std::string text;
    bool flag = false;
  };

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries_)
      if (e->key == key) return e.get();
    return nullptr;
  }

  static Json unwrap_manifest(const Json& file, const std::string& command) {
    RunManifest m;
    try {
      m = RunManifest::from_json(file);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
    if (!m.hash_matches()) throw ConfigError("manifest: config hash does not match its config");
    if (m.command != command) throw ConfigError("manifest: recorded command '" + m.command + "' is not '" + command + "'");
    if (!m.config.is_object()) throw ConfigError("manifest: config must be an object");
    return m.config;
  }

  static Json check(const Entry& e, const Json& v) {
    switch (e.kind) {
      case Kind::Unsigned:
        if (v.is_number_unsigned()) return v;
        break;
      case Kind::Real:
        if (v.is_number()) return v.get<double>();
        break;
      case Kind::Text:
        if (v.is_string()) return v;
        break;
      case Kind::Flag:
        if (v.is_boolean()) return v;
        break;
      case Kind::UnsignedList:
        if (v.is_number_unsigned()) return Json::array({v});
        if (v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number_unsigned(); }))
          return v;
        break;
    }
    throw ConfigError("config: wrong type for '" + e.key + "'");
  }

  static Json from_text(const Entry& e) {
    switch (e.kind) {
      case Kind::Unsigned: return parse_unsigned(e.key, e.text);
      case Kind::Real: return parse_real(e.key, e.text);
      case Kind::Text: return e.text;
      case Kind::Flag: return e.flag;
      case Kind::UnsignedList: {
        Json arr = Json::array();
        std::size_t start = 0;
        while (start <= e.text.size()) {
          const std::size_t comma = std::min(e.text.find(',', start), e.text.size());
          arr.push_back(parse_unsigned(e.key, e.text.substr(start, comma - start)));
          start = comma + 1;
        }
        return arr;
      }
    }
    return {};
  }

  CLI::App* app_;
  std::string config_path_;
  std::string out_dir_;
  bool json_ = false;
  std::vector<std::unique_ptr<Entry>> entries_;
};

std::size_t get_size(const Json& c, const char* key) { return c.at(key).get<std::size_t>(); }
double get_real(const Json& c, const char* key) { return c.at(key).get<double>(); }
std::string get_text(const Json& c, const char* key) { return c.at(key).get<std::string>(); }
std::vector<std::uint64_t> get_list(const Json& c, const char* key) {
  return c.at(key).get<std::vector<std::uint64_t>>();
}

std::vector<std::uint64_t> seeds_of(const Json& c) {
  auto s = get_list(c, "seed");
  if (s.empty()) throw ConfigError("seed: need at least one seed");
  return s;
}

struct Run {
  std::string command;
  const Params* params;
  Json config;
};

RunManifest manifest_for(const Run& run, std::vector<std::string> outputs) {
  RunManifest m;
  m.command = run.command;
  m.config_path = run.params->config_path();
  m.config = run.config;
  m.config_hash = config_hash(run.config);
  if (run.config.contains("seed")) m.seeds = get_list(run.config, "seed");
  m.timestamp = utc_timestamp();
  m.outputs = std::move(outputs);
  return m;
}

// Writes named files plus manifest.json into --out.
void write_outputs(const Run& run, const std::vector<std::pair<std::string, std::string>>& files) {
  const std::filesystem::path dir(run.params->out_dir());
  std::filesystem::create_directories(dir);
  std::vector<std::string> names;
  for (const auto& [name, body] : files) {
    write_file((dir / name).string(), body);
    names.push_back(name);
  }
  write_file((dir / "manifest.json").string(), manifest_for(run, names).to_json().dump(2) + "\n");
}

void print_suite(std::ostream& out, const SuiteResult& s, const std::string& prefix) {
  for (const auto& v : s.verdicts) {
    out << (v.matched() ? "ok       " : "MISMATCH ") << prefix << v.id << "  observed " << (v.observed_pass ? "pass" : "fail")
        << ", expected " << (v.expected_pass ? "pass" : "fail") << "  value " << format_double(v.value);
    if (!v.detail.empty()) out << "  (" << v.detail << ")";
    out << "\n";
  }
}

int report_suites(const Run& run, const std::vector<std::pair<std::uint64_t, SuiteResult>>& results, std::ostream& out,
                  std::ostream& err) {
  bool matched = true;
  Json arr = Json::array();
  for (const auto& [seed, s] : results) {
    matched = matched && s.matched();
    Json j = to_json(s);
    j["seed"] = seed;
    arr.push_back(std::move(j));
  }
  const Json summary{{"command", run.command}, {"config_hash", config_hash(run.config)}, {"config", run.config},
                     {"results", arr},          {"matched", matched}};
  if (!run.params->out_dir().empty()) write_outputs(run, {{"results.json", summary.dump(2) + "\n"}});
  if (run.params->json()) {
    out << summary.dump(2) << "\n";
  } else {
    const bool many = std::any_of(results.begin(), results.end(), [&](const auto& r) { return r.first != results.front().first; });
    for (const auto& [seed, s] : results) print_suite(out, s, many ? "seed " + std::to_string(seed) + " " : std::string());
    out << (matched ? "all checks matched" : "checks did not match") << "\n";
  }
  for (const auto& [seed, s] : results)
    if (const Verdict* v = s.first_mismatch()) err << "failing invariant: " << v->id << " (seed " << seed << ")\n";
  return matched ? kExitOk : kExitMismatch;
}

// ---------------------------------------------------------------------------
// selftest fixtures

Operator fixture_operator(const AlgebraPtr& alg, const Json& blocks) {
  if (!blocks.is_array() || blocks.size() != alg->num_blocks()) throw ConfigError("fixture: x needs one matrix per block");
  std::vector<Matrix> mats;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int d = alg->block(b).dim;
    const Json& rows = blocks[b];
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(d)) throw ConfigError("fixture: block shape mismatch");
    Matrix m(d, d);
    for (int i = 0; i < d; ++i) {
      const Json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(d)) throw ConfigError("fixture: block shape mismatch");
      for (int k = 0; k < d; ++k) {
        const Json& z = row[static_cast<std::size_t>(k)];
        if (z.is_number()) {
          m(i, k) = cplx(z.get<double>(), 0.0);
        } else if (z.is_array() && z.size() == 2 && z[0].is_number() && z[1].is_number()) {
          m(i, k) = cplx(z[0].get<double>(), z[1].get<double>());
        } else {
          throw ConfigError("fixture: entries are numbers or [re, im] pairs");
        }
      }
    }
    mats.push_back(std::move(m));
  }
  return Operator(alg, std::move(mats));
}

SuiteResult check_fixture(const std::string& path) {
  Json f;
  try {
    f = Json::parse(read_file(path));
  } catch (const Json::exception& ex) {
    throw ConfigError("fixture: " + std::string(ex.what()));
  } catch (const std::runtime_error& ex) {
    throw ConfigError(ex.what());
  }
  SuiteResult out{"fixture", {}};
  try {
    const std::string id = f.at("id").get<std::string>();
    std::vector<Block> blocks;
    for (const auto& b : f.at("blocks")) blocks.push_back({b.at("dim").get<int>(), b.at("weight").get<double>()});
    AlgebraPtr alg;
    try {
      alg = TracialAlgebra::make(std::move(blocks));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("fixture: ") + ex.what());
    }
    const Operator x = fixture_operator(alg, f.at("x"));
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    if (f.contains("trace")) {
      const auto rec = f.at("trace").get<std::vector<double>>();
      if (rec.size() != 2) throw ConfigError("fixture: trace is [re, im]");
      const cplx t = trace(x);
      const double err = std::abs(t - cplx(rec[0], rec[1]));
      out.verdicts.push_back({"fixture." + id + ".trace", true, close(t.real(), rec[0]) && close(t.imag(), rec[1]), err, 1e-9,
                              "tau(x) = " + format_double(t.real()) + " + " + format_double(t.imag()) + "i"});
    }
    if (f.contains("op_norm")) {
      const double rec = f.at("op_norm").get<double>(), v = op_norm(x);
      out.verdicts.push_back(
          {"fixture." + id + ".op-norm", true, close(v, rec), std::abs(v - rec), 1e-9, "||x|| = " + format_double(v)});
    }
    if (f.contains("mu")) {
      double worst = 0.0;
      bool ok = true;
      for (const auto& pair : f.at("mu")) {
        const double t = pair.at(0).get<double>(), rec = pair.at(1).get<double>();
        if (!(t > 0.0 && t < 1.0)) throw ConfigError("fixture: mu levels lie in (0, 1)");
        const double v = mu(x, t);
        worst = std::max(worst, std::abs(v - rec));
        ok = ok && close(v, rec);
      }
      out.verdicts.push_back({"fixture." + id + ".mu", true, ok, worst, 1e-9, ""});
    }
  } catch (const Json::exception& ex) {
    throw ConfigError("fixture: " + std::string(ex.what()));
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_selftest(const Run& run, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::uint64_t, SuiteResult>> results;
  const std::size_t samples = get_size(run.config, "samples");
  for (std::uint64_t seed : seeds_of(run.config)) {
    results.emplace_back(seed, suite_algebra(samples, seed));
    results.emplace_back(seed, suite_conditional_expectation(samples, seed, false));
  }
  const std::string fixture = get_text(run.config, "fixture");
  if (!fixture.empty()) results.emplace_back(0, check_fixture(fixture));
  return report_suites(run, results, out, err);
}

int cmd_verify(const std::string& family, const Run& run, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::uint64_t, SuiteResult>> results;
  const Json& c = run.config;
  for (std::uint64_t seed : seeds_of(c)) {
    if (family == "gt") {
      results.emplace_back(seed, suite_gt({parse_dims(get_text(c, "dims")), get_size(c, "count"), seed}));
    } else if (family == "igt") {
      results.emplace_back(seed, suite_igt({parse_dims(get_text(c, "dims")), get_size(c, "count"), seed}));
    } else if (family == "expineq") {
      const std::string mode = get_text(c, "mode");
      if (mode != "corrected" && mode != "as-stated") throw ConfigError("mode: expected 'corrected' or 'as-stated'");
      const double eps = get_real(c, "eps");
      if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("eps: must lie in (0, 1]");
      results.emplace_back(seed, suite_expineq({mode == "as-stated", eps, seed, get_size(c, "count")}));
    } else if (family == "scalars") {
      results.emplace_back(seed, suite_scalars());
    } else {
      results.emplace_back(seed, suite_chebyshev({parse_dims(get_text(c, "dims")), get_size(c, "count"), seed}));
    }
  }
  return report_suites(run, results, out, err);
}

std::vector<std::size_t> checkpoints_of(const Json& c) {
  const auto raw = get_list(c, "checkpoints");
  return {raw.begin(), raw.end()};
}

HermitianLaw law_of(const std::string& name) {
  if (name == "two-point") return HermitianLaw::TwoPoint;
  if (name == "bounded") return HermitianLaw::BoundedHermitian;
  if (name == "sigma-x") return HermitianLaw::SigmaX;
  throw ConfigError("law: expected two-point, bounded or sigma-x");
}

int cmd_lil(const std::string& regime, const Run& run, std::ostream& out, std::ostream& err) {
  const Json& c = run.config;
  const auto seeds = seeds_of(c);
  if (regime == "hw") {
    const std::string law = get_text(c, "law");
    Rng rng(seeds.front());
    Operator h = Operator::zero(TracialAlgebra::matrix(1));
    if (law == "heavy" || law == "sign") {
      const double p = law == "sign" ? 0.5 : get_real(c, "p");
      if (!(p > 0.0 && p < 1.0)) throw ConfigError("p: must lie in (0, 1)");
      const TwoPointLaw tp{p, std::sqrt((1.0 - p) / p)};
      h = tp.difference(tp.algebra());
    } else if (law == "bounded") {
      const std::size_t dim = get_size(c, "dim");
      if (dim < 2 || dim > 64) throw ConfigError("dim: must lie in [2, 64]");
      const AlgebraPtr alg = TracialAlgebra::matrix(static_cast<int>(dim));
      h = random_hermitian(alg, rng);
      h -= Operator::scalar(alg, trace(h));
      h *= cplx(1.0 / op_norm(h), 0.0);
    } else {
      throw ConfigError("law: expected heavy, sign or bounded");
    }
    HwConfig hc;
    hc.steps = get_size(c, "steps");
    hc.tower_steps = get_size(c, "tower_steps");
    hc.e = get_real(c, "e");
    const HwReport r = hw_pipeline(h, hc);
    const std::string csv = hw_csv(r);
    Json summary = to_json(r);
    summary["command"] = run.command;
    summary["config_hash"] = config_hash(c);
    if (!run.params->out_dir().empty())
      write_outputs(run, {{"lil_hw.csv", csv}, {"summary.json", summary.dump(2) + "\n"}});
    if (run.params->json()) {
      out << summary.dump(2) << "\n";
    } else if (run.params->out_dir().empty()) {
      out << csv;
    }
    err << "hw: envelope " << (r.envelope_holds ? "ok" : "VIOLATED") << ", z sum " << format_double(r.z_partial.back())
        << " <= " << format_double(r.z_bound) << ", w budget " << format_double(r.w_budget) << " <= "
        << format_double(r.l2_norm_sq) << "\n";
    return r.ok() ? kExitOk : kExitMismatch;
  }

  LilConfig lc;
  lc.steps = get_size(c, "steps");
  lc.budget = get_real(c, "budget");
  lc.checkpoints = checkpoints_of(c);
  if (regime == "classical") {
    lc.regime = LilRegime::Classical;
    lc.atoms = get_size(c, "atoms");
    lc.window_start = get_size(c, "window_start");
  } else if (regime == "tensor") {
    lc.regime = LilRegime::Tensor;
    lc.factor_dim = static_cast<int>(get_size(c, "factor_dim"));
    lc.law = law_of(get_text(c, "law"));
    lc.norm = get_real(c, "norm");
    lc.commutative = c.at("commutative").get<bool>();
  } else {
    lc.regime = LilRegime::Gue;
    lc.dim = static_cast<int>(get_size(c, "dim"));
  }
  const auto reports = lil_sweep(lc, seeds);
  const std::string csv = lil_csv(reports);
  bool ok = true;
  Json arr = Json::array();
  for (const auto& r : reports) {
    ok = ok && r.ok();
    arr.push_back(to_json(r));
  }
  const Json summary{{"command", run.command}, {"config_hash", config_hash(c)}, {"config", c}, {"reports", arr}, {"ok", ok}};
  const std::string csv_name = "lil_" + regime + ".csv";
  if (!run.params->out_dir().empty()) write_outputs(run, {{csv_name, csv}, {"summary.json", summary.dump(2) + "\n"}});
  if (run.params->json()) {
    out << summary.dump(2) << "\n";
  } else if (run.params->out_dir().empty()) {
    out << csv;
  }
  for (const auto& r : reports) {
    err << regime << " seed " << r.config.seed << ": max ratios op " << format_double(r.max_op_ratio) << ", s-number "
        << format_double(r.max_snumber_ratio) << ", witness " << format_double(r.max_witness_ratio);
    if (!r.atom_maxima.empty()) err << "; median " << format_double(r.median) << ", p99 " << format_double(r.p99);
    err << (r.ok() ? "" : "; INVARIANT VIOLATED") << "\n";
  }
  return ok ? kExitOk : kExitMismatch;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noncommutative martingale LIL toolkit", "nclil"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  struct Leaf {
    std::string command;
    CLI::App* app;
    std::unique_ptr<Params> params;
  };
  std::vector<Leaf> leaves;
  auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& command, const std::string& help) -> Params& {
    CLI::App* sub = parent->add_subcommand(name, help);
    leaves.push_back({command, sub, std::make_unique<Params>(sub)});
    return *leaves.back().params;
  };
  const Json one_seed = Json::array({1});

  {
    Params& p = leaf(&app, "selftest", "selftest", "algebra and conditional-expectation invariants");
    p.add("samples", Kind::Unsigned, 50, "random samples per invariant");
    p.add("seed", Kind::UnsignedList, one_seed, "seed list, comma separated");
    p.add("fixture", Kind::Text, "", "JSON fixture with recorded values to re-check");
  }

  CLI::App* verify = app.add_subcommand("verify", "inequality batteries");
  verify->require_subcommand(1);
  {
    Params& p = leaf(verify, "gt", "verify gt", "Golden-Thompson battery");
    p.add("dims", Kind::Text, "2..6", "matrix sizes a..b");
    p.add("count", Kind::Unsigned, 500, "random pairs");
    p.add("seed", Kind::UnsignedList, Json::array({7}), "seed list");
  }
  {
    Params& p = leaf(verify, "igt", "verify igt", "improved Golden-Thompson: kernel, quadrature, slack");
    p.add("dims", Kind::Text, "2..4", "matrix sizes a..b");
    p.add("count", Kind::Unsigned, 100, "random triples");
    p.add("seed", Kind::UnsignedList, Json::array({11}), "seed list");
  }
  {
    Params& p = leaf(verify, "expineq", "verify expineq", "martingale exponential inequality");
    p.add("mode", Kind::Text, "corrected", "corrected | as-stated");
    p.add("eps", Kind::Real, 1.0, "part (2) epsilon in (0, 1]");
    p.add("count", Kind::Unsigned, 40, "random Hermitian martingales");
    p.add("seed", Kind::UnsignedList, Json::array({5}), "seed list");
  }
  {
    Params& p = leaf(verify, "scalars", "verify scalars", "scalar helper inequalities");
    p.add("seed", Kind::UnsignedList, Json::array({0}), "seed list (unused)");
  }
  {
    Params& p = leaf(verify, "chebyshev", "verify chebyshev", "Chebyshev witness contracts");
    p.add("dims", Kind::Text, "2..6", "matrix sizes a..b");
    p.add("count", Kind::Unsigned, 200, "random sequences");
    p.add("seed", Kind::UnsignedList, Json::array({13}), "seed list");
  }

  CLI::App* lil = app.add_subcommand("lil", "iterated-logarithm experiments");
  lil->require_subcommand(1);
  auto ratio_keys = [&](Params& p) {
    p.add("seed", Kind::UnsignedList, one_seed, "seed list, run concurrently, reported in order");
    p.add("budget", Kind::Real, 0.05, "trace budget for the s-number and witness");
    p.add("checkpoints", Kind::UnsignedList, Json::array(), "checkpoint list (default log-spaced)");
  };
  {
    Params& p = leaf(lil, "classical", "lil classical", "streamed +-1 walks");
    p.add("atoms", Kind::Unsigned, 2048, "number of walks");
    p.add("steps", Kind::Unsigned, 200000, "horizon N");
    p.add("window_start", Kind::Unsigned, 1000, "first n of the running-max window");
    ratio_keys(p);
  }
  {
    Params& p = leaf(lil, "tensor", "lil tensor", "tensor-product Hermitian martingale");
    p.add("steps", Kind::Unsigned, 8, "horizon N (factor_dim^N <= 4096)");
    p.add("factor_dim", Kind::Unsigned, 2, "factor size");
    p.add("law", Kind::Text, "two-point", "two-point | bounded | sigma-x");
    p.add("norm", Kind::Real, 1.0, "difference norm (0 = degenerate)");
    p.add("commutative", Kind::Flag, false, "atoms instead of matrix factors");
    ratio_keys(p);
  }
  {
    Params& p = leaf(lil, "gue", "lil gue", "sums of independent GUE matrices");
    p.add("dim", Kind::Unsigned, 100, "matrix size");
    p.add("steps", Kind::Unsigned, 1000, "horizon N");
    ratio_keys(p);
  }
  {
    Params& p = leaf(lil, "hw", "lil hw", "three-way truncation pipeline");
    p.add("law", Kind::Text, "heavy", "heavy | sign | bounded");
    p.add("p", Kind::Real, 0.01, "heavy atom weight");
    p.add("dim", Kind::Unsigned, 4, "matrix size for the bounded law");
    p.add("steps", Kind::Unsigned, 1000, "split horizon");
    p.add("tower_steps", Kind::Unsigned, 6, "materialized tower for the ratio series");
    p.add("e", Kind::Real, 1.0, "truncation parameter");
    p.add("seed", Kind::UnsignedList, one_seed, "seed for the bounded law");
  }

  CLI::App* schema = app.add_subcommand("schema", "print the config JSON schemas of every command");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (schema->parsed()) {
    Json all = Json::object();
    for (const auto& l : leaves) all[l.command] = l.params->schema(l.command);
    out << all.dump(2) << "\n";
    return kExitOk;
  }

  try {
    for (const auto& l : leaves) {
      if (!l.app->parsed()) continue;
      const Run run{l.command, l.params.get(), l.params->resolve(l.command)};
      const std::string& name = l.app->get_name();
      if (l.command == "selftest") return cmd_selftest(run, out, err);
      if (l.command.rfind("verify", 0) == 0) return cmd_verify(name, run, out, err);
      return cmd_lil(name, run, out, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace nclil
