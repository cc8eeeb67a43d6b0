#pragma once

// Named verification suites shared by the command-line tool and the
// acceptance runner. Each check carries an expected verdict, so a documented
// failure is an asserted outcome rather than an error.

#include <cstdint>
#include <string>
#include <vector>

namespace nclil {

struct Verdict {
  std::string id;
  bool expected_pass = true;
  bool observed_pass = false;
  double value = 0.0;      // the measured quantity (error, slack, ...)
  double threshold = 0.0;  // what it was compared against
  std::string detail;
  bool matched() const { return expected_pass == observed_pass; }
};

struct SuiteResult {
  std::string family;
  std::vector<Verdict> verdicts;
  bool matched() const;
  /// First verdict whose outcome differs from its expectation, or nullptr.
  const Verdict* first_mismatch() const;
};

struct DimRange {
  int lo = 2;
  int hi = 6;
};
/// Parses "a..b" or a single integer.
DimRange parse_dims(const std::string& text);

/// Algebra-core invariants on random algebras: tracial state, positivity,
/// norm ordering, s-numbers against brute force, projection meets.
SuiteResult suite_algebra(std::size_t samples, std::uint64_t seed);

/// Tower property, trace preservation, bimodule property and contractivity
/// on tensor towers (including a 4096-atom one when `large` is set) and on
/// generated subalgebra towers. Errors are relative, threshold 1e-9.
SuiteResult suite_conditional_expectation(std::size_t samples, std::uint64_t seed, bool large = true);

struct GtOptions {
  DimRange dims{2, 6};
  std::size_t count = 500;
  std::uint64_t seed = 7;
};
SuiteResult suite_gt(const GtOptions& o);

struct IgtOptions {
  DimRange dims{2, 4};
  std::size_t count = 100;
  std::uint64_t seed = 11;
};
SuiteResult suite_igt(const IgtOptions& o);

struct ExpOptions {
  bool as_stated = false;
  double eps = 1.0;
  std::uint64_t seed = 5;
  std::size_t count = 40;  // envelope-clipped Hermitian martingales
};
/// Corrected mode: part (1) on [0, 6/M] and part (2) on the corrected range
/// over dyadic Rademacher, skewed two-point and envelope-clipped Hermitian
/// towers. As-stated mode: the boundary instance (eps = 1, M = 1, lam = 3,
/// p = 0.05) is expected to fail with the documented values.
SuiteResult suite_expineq(const ExpOptions& o);

SuiteResult suite_scalars();

struct ChebyshevOptions {
  DimRange dims{2, 6};
  std::size_t count = 200;
  std::uint64_t seed = 13;
};
SuiteResult suite_chebyshev(const ChebyshevOptions& o);

}  // namespace nclil
