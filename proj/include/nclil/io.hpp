#pragma once

// JSON and CSV serialization of reports, config hashing and run manifests.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nclil/conditional_expectation.hpp"
#include "nclil/inequalities.hpp"
#include "nclil/lil_lab.hpp"
#include "nclil/suites.hpp"

namespace nclil {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kLilCsvVersion = "lil-csv v1";
inline constexpr const char* kHwCsvVersion = "hw-csv v1";

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a of the compact dump (keys sorted), as 16 hex digits.
std::string config_hash(const Json& resolved);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  Json config;
  std::vector<std::uint64_t> seeds;
  std::string tool_version = kToolVersion;
  std::string timestamp;
  std::vector<std::string> outputs;

  Json to_json() const;
  /// Throws std::invalid_argument on missing or mistyped fields.
  static RunManifest from_json(const Json& j);
  bool hash_matches() const { return config_hash == nclil::config_hash(config); }
};

std::string utc_timestamp();
/// Shortest text that round-trips the double; "inf" / "nan" for non-finite.
std::string format_double(double v);

Json to_json(const IneqReport& r);
Json to_json(const BatteryReport& r);
Json to_json(const Verdict& v);
Json to_json(const SuiteResult& s);
Json to_json(const CheckpointRow& r);
/// Summary plus rows; atom maxima are reduced to quantiles.
Json to_json(const LilReport& r);
Json to_json(const HwReport& r);

/// One row per checkpoint per report:
/// seed,n,s2,u,op_ratio,snumber_ratio,witness_ratio,deficit
std::string lil_csv(std::span<const LilReport> reports);
/// One row per step: k,c1,c2,yprime_norm,envelope,z_l2sq,z_partial,w_support
std::string hw_csv(const HwReport& r);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace nclil
