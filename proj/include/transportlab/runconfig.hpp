#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "transportlab/estimators.hpp"
#include "transportlab/oracle.hpp"
#include "transportlab/spec.hpp"

namespace transportlab {

/// How the cohort is obtained: one sample of the whole population with S
/// observed (nested), or fixed-size participant / non-participant strata drawn
/// separately (non-nested). The latter loses the marginal participation rate,
/// so population-wide (target) estimands are off the table.
enum class TrialDesign { Nested, NonNested };

std::string_view design_name(TrialDesign d);  // "nested", "non_nested"
TrialDesign design_from_name(std::string_view s);

/// One simulate/estimate pipeline: which scenario, how much data, which
/// estimand/estimator grid. Serializable to a JSON config file (same keys as
/// the field names below; see README for the schema).
struct RunConfig {
  std::string scenario = "fig1";  // registered name, or path to a spec JSON
  std::int64_t n = 100'000;
  std::vector<std::uint64_t> seeds = {1};
  TrialDesign design = TrialDesign::Nested;
  std::size_t strata_participants = 0;     // non-nested only; both must be > 0
  std::size_t strata_nonparticipants = 0;
  bool mask_nonparticipants = false;       // z/a/y recorded only when S=1
  std::vector<Estimand> estimands;         // empty: full grid legal for design
  std::vector<EstimatorId> estimators = {EstimatorId::GFormula, EstimatorId::IPW};
  int bootstrap_replicates = 200;
  bool laplace = false;                    // add-half smoothing for nuisances
  std::string output_dir = "out";
  int jobs = 0;                            // 0 = hardware concurrency
  std::vector<std::string> overrides;      // "name=value" spec edits
};

/// Shape checks plus the design rule: a non-nested design forbids Target
/// population estimands (the participation margin is not in the data).
void validate_run_config(const RunConfig& cfg);

/// The scenario spec the config points at (registered fixture or spec file),
/// with overrides applied. Overrides must all be accepted here: the config
/// names one concrete scenario, so an unknown name is an error.
ScenarioSpec resolve_scenario(const RunConfig& cfg);

/// The estimand grid after defaulting: explicit list when given, otherwise
/// every kind x population combination legal under the design (both mean
/// arms plus the z=1 vs z=0 contrast).
std::vector<Estimand> resolve_estimands(const RunConfig& cfg);

RunConfig run_config_from_json_text(const std::string& text);
std::string run_config_to_json_text(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace transportlab
