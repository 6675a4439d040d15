#include "transportlab/runconfig.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "transportlab/errors.hpp"
#include "transportlab/scenarios.hpp"

namespace transportlab {

std::string_view design_name(TrialDesign d) {
  return d == TrialDesign::Nested ? "nested" : "non_nested";
}

TrialDesign design_from_name(std::string_view s) {
  if (s == "nested") return TrialDesign::Nested;
  if (s == "non_nested" || s == "non-nested") return TrialDesign::NonNested;
  fail(Err::ParseError, "unknown design " + std::string(s) + " (nested|non_nested)");
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.scenario.empty()) fail(Err::InvalidSpec, "config needs a scenario name or spec path");
  if (cfg.seeds.empty()) fail(Err::InvalidSpec, "config needs at least one seed");
  if (cfg.estimators.empty()) fail(Err::InvalidSpec, "config needs at least one estimator");
  {
    std::set<EstimatorId> seen;
    for (EstimatorId e : cfg.estimators)
      if (!seen.insert(e).second)
        fail(Err::InvalidSpec, "duplicate estimator " + std::string(estimator_name(e)));
  }
  if (cfg.bootstrap_replicates < 0) fail(Err::InvalidSpec, "bootstrap_replicates must be >= 0");
  if (cfg.jobs < 0) fail(Err::InvalidSpec, "jobs must be >= 0");
  if (cfg.output_dir.empty()) fail(Err::InvalidSpec, "output_dir must not be empty");

  if (cfg.design == TrialDesign::Nested) {
    if (cfg.n < 1) fail(Err::InvalidSpec, "nested design needs n >= 1");
    if (cfg.strata_participants != 0 || cfg.strata_nonparticipants != 0)
      fail(Err::InvalidSpec, "strata sizes apply to the non_nested design only");
  } else {
    if (cfg.strata_participants < 1 || cfg.strata_nonparticipants < 1)
      fail(Err::InvalidSpec, "non_nested design needs both strata sizes >= 1");
  }

  for (const Estimand& e : cfg.estimands) {
    validate_estimand(e);
    if (cfg.design == TrialDesign::NonNested && e.population == Population::Target)
      fail(Err::InvalidEstimand,
           "non_nested design cannot address the target population: separately drawn "
           "strata carry no participation margin");
  }
}

ScenarioSpec resolve_scenario(const RunConfig& cfg) {
  ScenarioSpec spec;
  bool registered = true;
  try {
    spec = default_spec(scenario_from_name(cfg.scenario));
  } catch (const Error& e) {
    if (e.code() != Err::UnknownScenario) throw;
    registered = false;
  }
  if (!registered) spec = load_spec_file(cfg.scenario);
  for (const std::string& ov : cfg.overrides) apply_override(spec, ov);
  validate_spec(spec);
  return spec;
}

std::vector<Estimand> resolve_estimands(const RunConfig& cfg) {
  if (!cfg.estimands.empty()) return cfg.estimands;
  std::vector<Estimand> grid;
  for (Population pop : {Population::Target, Population::NonRandomizedSubset,
                         Population::TrialPopulation}) {
    if (cfg.design == TrialDesign::NonNested && pop == Population::Target) continue;
    for (int z : {0, 1}) {
      grid.push_back(Estimand{EstimandKind::MeanJoint, pop, z});
      grid.push_back(Estimand{EstimandKind::MeanAssign, pop, z});
    }
    grid.push_back(Estimand{EstimandKind::ContrastJoint, pop, 1, 0});
    grid.push_back(Estimand{EstimandKind::ContrastAssign, pop, 1, 0});
  }
  return grid;
}

namespace {

void expect_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                 const char* where) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      fail(Err::ParseError, std::string("unknown key in ") + where + ": " + item.key());
}

Estimand estimand_from_json(const nlohmann::json& j) {
  expect_keys(j, {"kind", "population", "z", "z_alt"}, "estimand");
  if (!j.contains("kind") || !j.contains("population"))
    fail(Err::ParseError, "estimand needs kind and population");
  Estimand e;
  e.kind = kind_from_name(j.at("kind").get<std::string>());
  e.population = population_from_name(j.at("population").get<std::string>());
  e.z = j.value("z", 1);
  e.z_alt = j.value("z_alt", 0);
  return e;
}

nlohmann::ordered_json estimand_to_json(const Estimand& e) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(kind_name(e.kind));
  j["population"] = std::string(population_name(e.population));
  j["z"] = e.z;
  if (is_contrast(e.kind)) j["z_alt"] = e.z_alt;
  return j;
}

}  // namespace

RunConfig run_config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Err::ParseError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(Err::ParseError, "config must be a JSON object");

  RunConfig cfg;
  try {
    expect_keys(j,
                {"scenario", "n", "seeds", "design", "strata", "mask_nonparticipants",
                 "estimands", "estimators", "bootstrap_replicates", "laplace", "output_dir",
                 "jobs", "overrides"},
                "config");
    if (j.contains("scenario")) cfg.scenario = j.at("scenario").get<std::string>();
    if (j.contains("n")) cfg.n = j.at("n").get<std::int64_t>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("design"))
      cfg.design = design_from_name(j.at("design").get<std::string>());
    if (j.contains("strata")) {
      const auto& s = j.at("strata");
      expect_keys(s, {"participants", "nonparticipants"}, "strata");
      cfg.strata_participants = s.value("participants", std::size_t{0});
      cfg.strata_nonparticipants = s.value("nonparticipants", std::size_t{0});
    }
    if (j.contains("mask_nonparticipants"))
      cfg.mask_nonparticipants = j.at("mask_nonparticipants").get<bool>();
    if (j.contains("estimands"))
      for (const auto& e : j.at("estimands")) cfg.estimands.push_back(estimand_from_json(e));
    if (j.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& e : j.at("estimators"))
        cfg.estimators.push_back(estimator_from_name(e.get<std::string>()));
    }
    if (j.contains("bootstrap_replicates"))
      cfg.bootstrap_replicates = j.at("bootstrap_replicates").get<int>();
    if (j.contains("laplace")) cfg.laplace = j.at("laplace").get<bool>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
    if (j.contains("overrides"))
      cfg.overrides = j.at("overrides").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(Err::ParseError, std::string("bad config value: ") + e.what());
  }
  validate_run_config(cfg);
  return cfg;
}

std::string run_config_to_json_text(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = cfg.scenario;
  j["n"] = cfg.n;
  j["seeds"] = cfg.seeds;
  j["design"] = std::string(design_name(cfg.design));
  if (cfg.design == TrialDesign::NonNested)
    j["strata"] = {{"participants", cfg.strata_participants},
                   {"nonparticipants", cfg.strata_nonparticipants}};
  j["mask_nonparticipants"] = cfg.mask_nonparticipants;
  j["estimands"] = nlohmann::json::array();
  for (const Estimand& e : cfg.estimands) j["estimands"].push_back(estimand_to_json(e));
  j["estimators"] = nlohmann::json::array();
  for (EstimatorId e : cfg.estimators) j["estimators"].push_back(estimator_name(e));
  j["bootstrap_replicates"] = cfg.bootstrap_replicates;
  j["laplace"] = cfg.laplace;
  j["output_dir"] = cfg.output_dir;
  j["jobs"] = cfg.jobs;
  j["overrides"] = cfg.overrides;
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_json_text(buf.str());
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot write config file " + path);
  out << run_config_to_json_text(cfg);
  if (!out) fail(Err::IoError, "failed writing config file " + path);
}

}  // namespace transportlab
