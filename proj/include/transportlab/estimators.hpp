#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "transportlab/dataset.hpp"
#include "transportlab/oracle.hpp"

namespace transportlab {

enum class EstimatorId { GFormula, IPW, IPWNormalized };
std::string_view estimator_name(EstimatorId e);  // "gformula", "ipw", "ipw_normalized"
EstimatorId estimator_from_name(std::string_view s);

/// Sufficient statistics: every estimator depends on the data only through
/// these counts. Masked non-participant rows contribute only their x.
struct ContTable {
  int n_x = 0;                      // observed support size (max level + 1)
  std::vector<std::int64_t> s0;     // [x] rows with s=0
  std::vector<std::int64_t> s1zy;   // [x*4 + z*2 + y] rows with s=1

  static ContTable from_dataset(const Dataset& d);  // EmptyDataset on 0 rows

  std::int64_t n_s0_at(int x) const { return s0[x]; }
  std::int64_t n_s1zy(int x, int z, int y) const { return s1zy[x * 4 + z * 2 + y]; }
  std::int64_t n_s1z(int x, int z) const { return n_s1zy(x, z, 0) + n_s1zy(x, z, 1); }
  std::int64_t n_s1_at(int x) const { return n_s1z(x, 0) + n_s1z(x, 1); }
  std::int64_t n_at(int x) const { return s0[x] + n_s1_at(x); }
  std::int64_t n_s0() const;
  std::int64_t n_s1() const;
  std::int64_t n() const { return n_s0() + n_s1(); }
};

/// Empirical-frequency plug-in tables (saturated; no smoothing unless the
/// add-half flag is set). Cells without data are NaN and flagged.
struct NuisanceTables {
  int n_x = 0;
  bool laplace = false;
  double p_s1 = 0.0;                   // share of participants
  std::vector<double> p_s1_given_x;    // [x]
  std::vector<double> p_z1_given_xs1;  // [x]
  std::vector<double> y_mean_xs1z;     // [x*2 + z]
  ContTable counts;
};

NuisanceTables fit_nuisances(const ContTable& t, bool laplace_half = false);
NuisanceTables fit_nuisances(const Dataset& d, bool laplace_half = false);

/// Point estimators. The g-formula forms standardize the per-cell outcome
/// means over the population's covariate frequencies; the IPW forms weight
/// participant outcomes by inverse participation/assignment probabilities.
/// With self-fitted empirical-frequency nuisances all forms for the same
/// population agree to floating-point error. Errors: PositivityViolation
/// (names the empty cell), NoParticipants, NoNonParticipants, NonfiniteWeight.
double gformula_target(const ContTable& t, const NuisanceTables& nt, int z);
double ipw_target(const ContTable& t, const NuisanceTables& nt, int z, bool normalized);
double gformula_subset(const ContTable& t, const NuisanceTables& nt, int z);
double ipw_subset(const ContTable& t, const NuisanceTables& nt, int z, bool normalized = false);
double trial_population(const ContTable& t, const NuisanceTables& nt, int z, EstimatorId form);

// Dataset-level wrappers (build the count table, reuse the given nuisances).
double gformula_target(const Dataset& d, const NuisanceTables& nt, int z);
double ipw_target(const Dataset& d, const NuisanceTables& nt, int z, bool normalized);
double gformula_subset(const Dataset& d, const NuisanceTables& nt, int z);
double ipw_subset(const Dataset& d, const NuisanceTables& nt, int z);
double trial_population(const Dataset& d, const NuisanceTables& nt, int z, EstimatorId form);

/// One (population, estimator, arm) evaluation with self-consistent dispatch.
double point_estimate(const ContTable& t, const NuisanceTables& nt, Population pop,
                      EstimatorId est, int z);

struct BootstrapConfig {
  int replicates = 200;
  std::uint64_t seed = 7;
};

struct EstimateReport {
  Estimand estimand;
  EstimatorId estimator = EstimatorId::GFormula;
  double point = 0.0;
  double mc_se = 0.0;
  int replicates_used = 0;
  std::optional<double> oracle;           // exact counterfactual value
  std::optional<double> abs_bias;         // |point - oracle|
  std::optional<double> functional;       // exact asymptotic value of the plug-in
  std::optional<double> asymptotic_bias;  // |functional - oracle|
  bool positivity_ok = true;
  std::size_t n = 0;
  std::uint64_t seed = 0;    // dataset seed, from provenance
  std::string scenario;      // provenance tag
  std::vector<double> replicate_values;  // kept in memory for paired contrasts
};

/// Point + bootstrap on one dataset. Contrast estimands evaluate both arms on
/// the same resampled tables (paired replication). Bootstrap resamples the
/// sufficient count table multinomially, one seed-derived engine per
/// replicate; replicates that lose a required cell are dropped from mc_se.
EstimateReport estimate(const Dataset& d, const Estimand& e, EstimatorId est,
                        const BootstrapConfig& bs = {}, bool laplace_half = false);

/// Same, on a prebuilt count table; scenario/seed provenance left to the caller.
EstimateReport estimate(const ContTable& t, const Estimand& e, EstimatorId est,
                        const BootstrapConfig& bs = {}, bool laplace_half = false);

/// Difference of two mean reports with paired-replicate mc_se. Requires same
/// estimator, same population, same mean kind, different arms
/// (MismatchedEstimands otherwise).
EstimateReport contrast(const EstimateReport& e1, const EstimateReport& e2);

/// Fills oracle / functional / bias columns from exact enumeration.
void annotate_truth(EstimateReport& rep, const ScenarioSpec& spec);

std::string report_to_json_text(const EstimateReport& rep);
std::string reports_csv_header();
std::string report_to_csv_row(const EstimateReport& rep);

struct PositivityRow {
  int x = 0;
  std::int64_t n_total = 0;
  std::int64_t n_s1 = 0;
  double p_s1 = 0.0;  // NaN when no rows at x
  double p_z1 = 0.0;  // NaN when no participant rows at x
  bool participation_ok = true;  // 0 < P(S=1|x) < 1 empirically
  bool assignment_ok[2] = {true, true};  // each arm seen among participants
};

struct PositivityReport {
  std::vector<PositivityRow> rows;
  bool all_ok = true;
};

/// Empirical positivity diagnostics per covariate level, separating the
/// participation condition from the two assignment-arm conditions.
PositivityReport positivity_report(const Dataset& d);
std::string positivity_to_text(const PositivityReport& rep);
std::string positivity_to_json_text(const PositivityReport& rep);

}  // namespace transportlab
