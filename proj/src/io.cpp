#include "nclil/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nclil {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const Json& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(resolved.dump())));
  return buf;
}

Json RunManifest::to_json() const {
  return Json{{"command", command},           {"config_path", config_path}, {"config_hash", config_hash},
              {"config", config},             {"seeds", seeds},             {"tool_version", tool_version},
              {"timestamp", timestamp},       {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config_path = j.at("config_path").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::string>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("manifest: ") + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// JSON has no infinities; they are written as strings.
Json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

}  // namespace

Json to_json(const IneqReport& r) {
  return Json{{"id", r.id},         {"instance", r.instance},           {"lhs", number(r.lhs)},
              {"rhs", number(r.rhs)}, {"slack", number(r.slack)},       {"rel_slack", number(r.rel_slack)},
              {"status", to_string(r.status)}};
}

Json to_json(const BatteryReport& r) {
  Json j{{"id", r.id},
         {"count", r.count},
         {"failures", r.failures},
         {"min_rel_slack", number(r.min_rel_slack)},
         {"pass", r.pass()}};
  if (r.worst) j["worst"] = to_json(*r.worst);
  return j;
}

Json to_json(const Verdict& v) {
  return Json{{"id", v.id},
              {"expected", v.expected_pass ? "pass" : "fail"},
              {"observed", v.observed_pass ? "pass" : "fail"},
              {"matched", v.matched()},
              {"value", number(v.value)},
              {"threshold", number(v.threshold)},
              {"detail", v.detail}};
}

Json to_json(const SuiteResult& s) {
  Json checks = Json::array();
  for (const auto& v : s.verdicts) checks.push_back(to_json(v));
  return Json{{"family", s.family}, {"matched", s.matched()}, {"checks", checks}};
}

Json to_json(const CheckpointRow& r) {
  return Json{{"n", r.n},
              {"s2", number(r.s2)},
              {"u", number(r.u)},
              {"op_ratio", number(r.op_ratio)},
              {"snumber_ratio", number(r.snumber_ratio)},
              {"witness_ratio", number(r.witness_ratio)},
              {"deficit", number(r.deficit)}};
}

Json to_json(const LilReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back(to_json(row));
  Json j{{"regime", to_string(r.config.regime)},
         {"seed", r.config.seed},
         {"steps", r.config.steps},
         {"budget", r.config.budget},
         {"max_op_ratio", number(r.max_op_ratio)},
         {"max_snumber_ratio", number(r.max_snumber_ratio)},
         {"max_witness_ratio", number(r.max_witness_ratio)},
         {"ordering_holds", r.ordering_holds},
         {"certificates_hold", r.certificates_hold},
         {"rows", rows}};
  if (!r.atom_maxima.empty()) {
    j["atoms"] = r.atom_maxima.size();
    j["window_start"] = r.config.window_start;
    j["median"] = number(r.median);
    j["p99"] = number(r.p99);
  }
  return j;
}

Json to_json(const HwReport& r) {
  Json ratios = Json::array();
  for (const auto& row : r.ratios)
    ratios.push_back(Json{{"n", row.n},
                          {"total", number(row.total)},
                          {"yprime", number(row.yprime)},
                          {"z", number(row.z)},
                          {"w", number(row.w)}});
  return Json{{"steps", r.config.steps},
              {"e", r.config.e},
              {"l2_norm_sq", number(r.l2_norm_sq)},
              {"envelope_holds", r.envelope_holds},
              {"z_sum", number(r.z_partial.empty() ? 0.0 : r.z_partial.back())},
              {"z_bound", number(r.z_bound)},
              {"z_bounded", r.z_bounded},
              {"w_budget", number(r.w_budget)},
              {"w_budget_holds", r.w_budget_holds},
              {"max_resum_error", number(r.max_resum_error)},
              {"max_cross_error", number(r.max_cross_error)},
              {"ratios", ratios},
              {"ok", r.ok()}};
}

std::string lil_csv(std::span<const LilReport> reports) {
  std::ostringstream os;
  os << "# " << kLilCsvVersion << "\n";
  os << "seed,n,s2,u,op_ratio,snumber_ratio,witness_ratio,deficit\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      os << r.config.seed << ',' << row.n << ',' << format_double(row.s2) << ',' << format_double(row.u) << ','
         << format_double(row.op_ratio) << ',' << format_double(row.snumber_ratio) << ','
         << format_double(row.witness_ratio) << ',' << format_double(row.deficit) << '\n';
  return os.str();
}

std::string hw_csv(const HwReport& r) {
  std::ostringstream os;
  os << "# " << kHwCsvVersion << "\n";
  os << "k,c1,c2,yprime_norm,envelope,z_l2sq,z_partial,w_support\n";
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const HwStep& s = r.steps[i];
    os << s.k << ',' << format_double(s.c1) << ',' << format_double(s.c2) << ',' << format_double(s.yprime_norm) << ','
       << format_double(s.envelope) << ',' << format_double(s.z_l2sq) << ',' << format_double(r.z_partial[i]) << ','
       << format_double(s.w_support) << '\n';
  }
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace nclil
