#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "transportlab/errors.hpp"
#include "transportlab/verify.hpp"

using namespace transportlab;

namespace {

// Small-but-healthy settings: every contingency cell is populated with room
// to spare, so structural assertions never ride on sampling luck.
VerifyConfig quick(std::vector<ScenarioId> ids, std::int64_t n = 5000) {
  VerifyConfig cfg;
  cfg.scenarios = std::move(ids);
  cfg.n = n;
  cfg.seeds = {101, 102};
  cfg.consistency_n = 500;
  cfg.bootstrap_replicates = 8;
  cfg.jobs = 2;
  return cfg;
}

const VerdictRow& row_by_id(const VerifyReport& rep, const std::string& id) {
  for (const VerdictRow& r : rep.rows)
    if (r.claim_id == id) return r;
  REQUIRE_MESSAGE(false, ("no row with claim_id " + id).c_str());
  static VerdictRow dummy;
  return dummy;
}

std::map<std::string, int> category_counts(const VerifyReport& rep) {
  std::map<std::string, int> out;
  for (const VerdictRow& r : rep.rows) ++out[r.category];
  return out;
}

Err code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Err::UnknownScenario;  // sentinel: "did not throw"
}

constexpr const char* kPops[] = {"target", "subset", "trial"};
constexpr const char* kKinds[] = {"mean_joint", "mean_assign", "contrast_joint",
                                  "contrast_assign"};

}  // namespace

TEST_CASE("verify validates its configuration before doing any work") {
  VerifyConfig cfg = quick({ScenarioId::Fig1PerfectAdherence});
  cfg.seeds.clear();
  CHECK(code_of([&] { run_verify(cfg); }) == Err::InvalidSpec);

  cfg = quick({ScenarioId::Fig1PerfectAdherence});
  cfg.n = 9;
  CHECK(code_of([&] { run_verify(cfg); }) == Err::InvalidSpec);

  cfg = quick({ScenarioId::Fig1PerfectAdherence});
  cfg.bootstrap_replicates = 1;
  CHECK(code_of([&] { run_verify(cfg); }) == Err::InvalidSpec);

  // An override must land in at least one scenario in scope.
  cfg = quick({ScenarioId::Fig1PerfectAdherence});
  cfg.overrides = {"beta_S_on_A=0"};  // that edge does not exist here
  try {
    run_verify(cfg);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::InvalidSpec);
    CHECK(std::string(e.what()).find(
              "override not accepted by any scenario in scope: beta_S_on_A=0") !=
          std::string::npos);
  }
  // ...and the same override is fine when any scenario in scope has the edge.
  cfg.scenarios = {ScenarioId::Fig2DirectEffect, ScenarioId::Fig3CommonCauses};
  CHECK_NOTHROW(run_verify(cfg));

  // Syntactically broken overrides are hard errors, not scope misses.
  cfg = quick({ScenarioId::Fig2DirectEffect});
  cfg.overrides = {"beta_A_on_Y=abc"};
  CHECK(code_of([&] { run_verify(cfg); }) == Err::ParseError);
}

TEST_CASE("a single-scenario run produces the full claim matrix in order") {
  VerifyConfig cfg = quick({ScenarioId::Fig1PerfectAdherence}, 20000);
  cfg.seeds = {101, 102, 103};
  cfg.bootstrap_replicates = 50;
  cfg.consistency_n = 2000;
  const VerifyReport rep = run_verify(cfg);

  const auto table = independence_table(StructureId::Fig1);
  const auto counts = category_counts(rep);
  CHECK(counts.at("graph") == static_cast<int>(table.size()));
  CHECK(counts.at("distribution") == 5 + static_cast<int>(table.size()));
  CHECK(counts.at("consistency") == 1);
  CHECK(counts.at("estimation") == 12);
  CHECK(rep.rows.size() == table.size() * 2 + 5 + 1 + 12);

  // Graph conformance rows lead, one per claimed (in)dependence, same order.
  for (std::size_t i = 0; i < table.size(); ++i) {
    CHECK(rep.rows[i].claim_id == table[i].claim_id);
    CHECK(rep.rows[i].category == "graph");
    CHECK(rep.rows[i].expected == (table[i].expected_separated ? "separated" : "connected"));
    CHECK(rep.rows[i].observed == rep.rows[i].expected);
    CHECK(rep.rows[i].pass);
  }

  for (const char* tag : {"dag", "do_z0", "do_z1", "do_s1_z0", "do_s1_z1"}) {
    const VerdictRow& r = row_by_id(rep, std::string("fig1.markov.") + tag);
    CHECK(r.category == "distribution");
    CHECK(r.expected == "independent");
    CHECK(r.observed == "independent");
    CHECK(r.statistic < r.threshold);
    CHECK(r.pass);
  }

  // Enumerated-information rows mirror the graph claims one for one.
  for (const auto& c : table) {
    std::string cid = c.claim_id;
    cid.replace(cid.find(".dsep."), 6, ".cmi.");
    const VerdictRow& r = row_by_id(rep, cid);
    CHECK(r.category == "distribution");
    CHECK(r.expected == (c.expected_separated ? "independent" : "dependent"));
    CHECK(r.pass);
  }

  const VerdictRow& cons = row_by_id(rep, "fig1.consistency");
  CHECK(cons.category == "consistency");
  CHECK(cons.expected == "0 violations");
  CHECK(cons.observed == "0 violations");
  CHECK(cons.statistic == 0.0);
  CHECK(cons.pass);

  // Everything is transportable here, so all estimation rows agree.
  for (const char* pop : kPops) {
    for (const char* kind : kKinds) {
      const VerdictRow& r = row_by_id(rep, std::string("fig1.") + pop + "." + kind);
      CHECK(r.category == "estimation");
      CHECK(r.expected == "identified");
      CHECK(r.observed == "identified");
      CHECK(r.pass);
      CHECK(r.statistic < r.threshold);
    }
  }

  CHECK(rep.failures() == 0);
  CHECK(rep.all_pass());
  CHECK(rep.config.scenarios == std::vector<ScenarioId>{ScenarioId::Fig1PerfectAdherence});
  CHECK(rep.config.seeds == cfg.seeds);
  CHECK(rep.elapsed_seconds > 0.0);
}

TEST_CASE("estimation expectations follow the scenario structure") {
  // Direct-effect structure: holding-assignment claims transport, the
  // assignment-only ones are confounded by the participation edge into A.
  const VerifyReport fig2 = run_verify(quick({ScenarioId::Fig2DirectEffect}));
  for (const char* pop : {"target", "subset"}) {
    CHECK(row_by_id(fig2, std::string("fig2.") + pop + ".mean_joint").expected == "identified");
    CHECK(row_by_id(fig2, std::string("fig2.") + pop + ".contrast_joint").expected ==
          "identified");
    CHECK(row_by_id(fig2, std::string("fig2.") + pop + ".mean_assign").expected ==
          "not-identified");
    CHECK(row_by_id(fig2, std::string("fig2.") + pop + ".contrast_assign").expected ==
          "not-identified");
  }
  for (const char* kind : kKinds)
    CHECK(row_by_id(fig2, std::string("fig2.trial.") + kind).expected == "identified");

  // Shared-cause structure: the participation latent reaches treatment, so
  // nothing outside the trial transports, in either claim family.
  const VerifyReport fig3 = run_verify(quick({ScenarioId::Fig3CommonCauses}));
  for (const char* pop : {"target", "subset"})
    for (const char* kind : kKinds)
      CHECK(row_by_id(fig3, std::string("fig3.") + pop + "." + kind).expected ==
            "not-identified");
  for (const char* kind : kKinds)
    CHECK(row_by_id(fig3, std::string("fig3.trial.") + kind).expected == "identified");
}

TEST_CASE("overrides flip expectations and skip coefficient-dependent claims") {
  // Severing the participation-to-treatment fork restores every estimand.
  VerifyConfig cfg = quick({ScenarioId::Fig3CommonCauses});
  cfg.overrides = {"gamma_U1_on_S=0"};
  const VerifyReport restored = run_verify(cfg);
  for (const char* pop : kPops)
    for (const char* kind : kKinds)
      CHECK(row_by_id(restored, std::string("fig3.") + pop + "." + kind).expected ==
            "identified");

  // Dependence claims promise nothing once coefficients move: those rows are
  // recorded as skipped and never fail.
  for (const VerdictRow& r : restored.rows) {
    if (r.category == "distribution" && r.expected == "dependent") {
      CHECK(r.observed == "skipped");
      CHECK(r.pass);
      CHECK(r.details.find("shipped fixtures only") != std::string::npos);
    }
  }

  // Cutting only the main treatment edge leaves the z=1 arm biased through
  // the assignment interaction: arms split and the claim becomes mixed.
  VerifyConfig part = quick({ScenarioId::Fig3CommonCauses});
  part.overrides = {"gamma_U1_on_A=0"};
  const VerifyReport mixed = run_verify(part);
  for (const char* pop : {"target", "subset"}) {
    const VerdictRow& mj = row_by_id(mixed, std::string("fig3.") + pop + ".mean_joint");
    CHECK(mj.expected == "mixed");
    CHECK(mj.details.find("[expect agreement]") != std::string::npos);
    CHECK(mj.details.find("[expect bias]") != std::string::npos);
    CHECK(row_by_id(mixed, std::string("fig3.") + pop + ".mean_assign").expected == "mixed");
    CHECK(row_by_id(mixed, std::string("fig3.") + pop + ".contrast_joint").expected ==
          "not-identified");
    CHECK(row_by_id(mixed, std::string("fig3.") + pop + ".contrast_assign").expected ==
          "not-identified");
  }

  // Unmixed claims carry no per-series expectation markers.
  const VerdictRow& plain = row_by_id(mixed, "fig3.trial.mean_joint");
  CHECK(plain.expected == "identified");
  CHECK(plain.details.find("[expect") == std::string::npos);

  // Removing the direct participation edge makes the second structure fully
  // transportable again.
  VerifyConfig f2 = quick({ScenarioId::Fig2DirectEffect});
  f2.overrides = {"beta_S_on_A=0"};
  const VerifyReport f2rep = run_verify(f2);
  for (const char* pop : kPops)
    for (const char* kind : kKinds)
      CHECK(row_by_id(f2rep, std::string("fig2.") + pop + "." + kind).expected == "identified");
}

TEST_CASE("trial-conditional claims ride with the combined scenario") {
  const VerifyReport rep = run_verify(quick({ScenarioId::CombinedAppendix}));
  bool saw_tc_graph = false, saw_tc_cmi = false;
  for (const VerdictRow& r : rep.rows) {
    if (r.claim_id.rfind("trial-conditional.dsep.", 0) == 0) {
      saw_tc_graph = true;
      CHECK(r.category == "graph");
      CHECK(r.pass);
    }
    if (r.claim_id.rfind("trial-conditional.cmi.", 0) == 0) saw_tc_cmi = true;
  }
  CHECK(saw_tc_graph);
  CHECK(saw_tc_cmi);

  // Both claim families are confounded in the combined structure.
  for (const char* pop : {"target", "subset"})
    for (const char* kind : kKinds)
      CHECK(row_by_id(rep, std::string("combined.") + pop + "." + kind).expected ==
            "not-identified");
}

TEST_CASE("verify output is deterministic and thread-count independent") {
  const VerifyConfig cfg = quick({ScenarioId::Fig1PerfectAdherence});
  const VerifyReport a = run_verify(cfg);
  const VerifyReport b = run_verify(cfg);
  CHECK(verify_to_csv(a) == verify_to_csv(b));
  CHECK(verify_to_json_text(a) == verify_to_json_text(b));

  VerifyConfig serial = cfg;
  serial.jobs = 1;
  const VerifyReport c = run_verify(serial);
  CHECK(verify_to_csv(a) == verify_to_csv(c));

  VerifyConfig other_seed = cfg;
  other_seed.seeds = {201, 202};
  const VerifyReport d = run_verify(other_seed);
  CHECK(verify_to_csv(a) != verify_to_csv(d));
}

TEST_CASE("report renderers: text shape, csv escaping, json fields") {
  VerifyReport rep;
  rep.config.scenarios = {ScenarioId::Fig1PerfectAdherence};
  rep.config.seeds = {7};
  rep.config.overrides = {"beta_A_on_Y=0.5"};
  rep.elapsed_seconds = 1.25;

  VerdictRow good;
  good.claim_id = "fig1.dsep.1";
  good.category = "graph";
  good.expected = "separated";
  good.observed = "separated";
  good.pass = true;
  good.details = "never shown for passes";
  VerdictRow bad;
  bad.claim_id = "fig1.target.mean_joint";
  bad.category = "estimation";
  bad.expected = "identified";
  bad.observed = "ambiguous";
  bad.statistic = 0.5;
  bad.threshold = 0.25;
  bad.pass = false;
  bad.details = "se 0.1, says \"check, the units\"\nsecond line";
  rep.rows = {good, bad};

  CHECK(rep.failures() == 1);
  CHECK(!rep.all_pass());

  const std::string text = verify_to_text(rep);
  CHECK(text.find("verify: scenarios=fig1 n=1000000 seeds=7 --set beta_A_on_Y=0.5") !=
        std::string::npos);
  CHECK(text.find("PASS  fig1.dsep.1") != std::string::npos);
  CHECK(text.find("FAIL  fig1.target.mean_joint") != std::string::npos);
  CHECK(text.find("never shown for passes") == std::string::npos);
  CHECK(text.find("se 0.1") != std::string::npos);
  CHECK(text.find("1/2 rows pass (1 FAILED)") != std::string::npos);

  const std::string csv = verify_to_csv(rep);
  CHECK(csv.rfind("claim_id,category,expected,observed,statistic,threshold,pass,details\n",
                  0) == 0);
  // Commas, quotes, and newlines in a field arrive quoted with doubled quotes.
  CHECK(csv.find("\"se 0.1, says \"\"check, the units\"\"\nsecond line\"") !=
        std::string::npos);
  CHECK(csv.find("fig1.dsep.1,graph,separated,separated,") != std::string::npos);

  const auto j = nlohmann::json::parse(verify_to_json_text(rep));
  CHECK(j.at("scenarios") == nlohmann::json::array({"fig1"}));
  CHECK(j.at("n") == 1000000);
  CHECK(j.at("overrides") == nlohmann::json::array({"beta_A_on_Y=0.5"}));
  CHECK(j.at("rows").size() == 2);
  CHECK(j.at("rows")[0].at("pass") == true);
  CHECK(j.at("rows")[1].at("observed") == "ambiguous");
  CHECK(j.at("rows")[1].at("statistic") == 0.5);
  CHECK(j.at("rows")[0].at("statistic").is_null());  // NaN has no JSON number
  CHECK(j.at("failures") == 1);
  CHECK(j.at("all_pass") == false);
  CHECK(!j.contains("elapsed_seconds"));  // reruns must match byte for byte
}
