#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace qgerbe {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t passed = 0;
  /// Largest residual seen, in the suite's own metric.
  double worst = 0;
  /// First failure, empty when every case passed.
  std::string first_failure;

  bool pass() const { return cases > 0 && passed == cases; }
};

struct SelftestOptions {
  /// Runs only suites whose name contains this string; empty runs all.
  std::string filter;
  std::uint64_t seed = 1;
  /// Adds a suite that always fails.
  bool inject_failure = false;
};

struct SelftestReport {
  std::vector<SuiteResult> suites;

  bool pass() const;
};

/// Every suite name in run order.
std::vector<std::string> selftest_suite_names();

SelftestReport run_selftest(const SelftestOptions& options);

/// No timings, so equal options give byte-identical output.
nlohmann::json to_json(const SelftestReport& report);

} // namespace qgerbe
