#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "transportlab/scenarios.hpp"

namespace transportlab {

/// One `verify` run: the full claim matrix for the chosen scenarios at the
/// configured sample size and seeds, plus graph conformance rows, enumerated
/// distribution checks, and the counterfactual-consistency sweep.
struct VerifyConfig {
  std::vector<ScenarioId> scenarios;  // empty: every registered scenario
  std::int64_t n = 1'000'000;
  std::vector<std::uint64_t> seeds = {101, 102, 103, 104, 105};
  std::size_t consistency_n = 10'000;
  int bootstrap_replicates = 200;
  int jobs = 0;                        // parallel dataset tasks; 0 = hardware
  std::vector<std::string> overrides;  // "name=value", applied where accepted
};

struct VerdictRow {
  std::string claim_id;
  std::string category;  // graph | distribution | consistency | estimation
  std::string expected;  // separated/connected, independent/dependent,
                         // identified/not-identified, "0 violations"
  std::string observed;
  double statistic = std::numeric_limits<double>::quiet_NaN();  // |bias|, CMI, or count
  double threshold = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::string details;
};

struct VerifyReport {
  VerifyConfig config;  // echo with the scenario list resolved
  std::vector<VerdictRow> rows;
  double elapsed_seconds = 0.0;

  int failures() const;
  bool all_pass() const { return failures() == 0; }
};

/// Runs every row for the configured scenarios. Deterministic for a fixed
/// config: the worker count changes wall time only, never a value. Failed
/// claims are rows, not exceptions; exceptions are reserved for an invalid
/// config (no seeds, override accepted by no scenario in scope, bad values).
VerifyReport run_verify(const VerifyConfig& cfg);

/// Console form: one line per row, details for failures, summary trailer.
std::string verify_to_text(const VerifyReport& rep);
/// Machine forms; both are byte-stable across reruns with identical config.
std::string verify_to_csv(const VerifyReport& rep);
std::string verify_to_json_text(const VerifyReport& rep);

}  // namespace transportlab
