#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "transportlab/sample.hpp"

using namespace transportlab;

namespace {

bool same_columns(const Dataset& a, const Dataset& b) {
  return a.x == b.x && a.s == b.s && a.z == b.z && a.a == b.a && a.y == b.y;
}

double mean_of(const std::vector<std::int8_t>& col) {
  double sum = 0.0;
  for (auto v : col) sum += v;
  return sum / static_cast<double>(col.size());
}

}  // namespace

TEST_CASE("observational draws are bit-identical across thread counts") {
  for (ScenarioId id : {ScenarioId::Fig1PerfectAdherence, ScenarioId::CombinedAppendix}) {
    auto spec = default_spec(id);
    auto one = sample_observational(spec, 40000, false, 77, 1);
    auto four = sample_observational(spec, 40000, false, 77, 4);
    auto nine = sample_observational(spec, 40000, false, 77, 9);
    CHECK(same_columns(one, four));
    CHECK(same_columns(one, nine));
  }
}

TEST_CASE("draws are a pure function of the seed") {
  auto spec = default_spec(ScenarioId::Fig2DirectEffect);
  CHECK(same_columns(sample_observational(spec, 5000, false, 3),
                     sample_observational(spec, 5000, false, 3)));
  CHECK_FALSE(same_columns(sample_observational(spec, 5000, false, 3),
                           sample_observational(spec, 5000, false, 4)));

  // A longer run extends a shorter one row for row.
  auto small = sample_observational(spec, 1000, false, 3);
  auto large = sample_observational(spec, 2000, false, 3);
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK(small.x[i] == large.x[i]);
    CHECK(small.y[i] == large.y[i]);
  }
}

TEST_CASE("provenance records how a dataset was produced") {
  auto spec = default_spec(ScenarioId::Fig3CommonCauses);
  auto d = sample_observational(spec, 100, true, 11);
  CHECK(d.provenance.scenario == ScenarioId::Fig3CommonCauses);
  CHECK(d.provenance.regime == RegimeSpec{Regime::Observational, -1});
  CHECK(d.provenance.masked);
  CHECK_FALSE(d.provenance.non_nested);
  CHECK(d.provenance.seed == 11);

  auto iv = sample_interventional(spec, {Regime::DoS1Z, 0}, 100, 11);
  CHECK(iv.provenance.regime == RegimeSpec{Regime::DoS1Z, 0});
  CHECK_FALSE(iv.provenance.masked);
}

TEST_CASE("masking hides exactly the non-participant outcomes") {
  auto spec = default_spec(ScenarioId::Fig2DirectEffect);
  auto masked = sample_observational(spec, 20000, true, 5);
  auto open = sample_observational(spec, 20000, false, 5);

  std::size_t hidden = 0;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    CHECK(masked.x[i] == open.x[i]);
    CHECK(masked.s[i] == open.s[i]);
    if (masked.s[i] == 0) {
      CHECK(masked.z[i] == kNA);
      CHECK(masked.a[i] == kNA);
      CHECK(masked.y[i] == kNA);
      ++hidden;
    } else {
      CHECK(masked.z[i] == open.z[i]);
      CHECK(masked.a[i] == open.a[i]);
      CHECK(masked.y[i] == open.y[i]);
    }
  }
  CHECK(hidden > 0);
  CHECK(hidden < masked.size());
}

TEST_CASE("the deterministic-copy scenario has perfect adherence in every regime") {
  auto spec = default_spec(ScenarioId::Fig1PerfectAdherence);
  auto obs = sample_observational(spec, 10000, false, 21);
  for (std::size_t i = 0; i < obs.size(); ++i) CHECK(obs.a[i] == obs.z[i]);

  for (int z = 0; z < 2; ++z) {
    auto dz = sample_interventional(spec, {Regime::DoZ, z}, 10000, 21);
    for (std::size_t i = 0; i < dz.size(); ++i) {
      CHECK(dz.z[i] == z);
      CHECK(dz.a[i] == z);
    }
  }
}

TEST_CASE("interventional regimes pin their targets and resample downstream") {
  auto spec = default_spec(ScenarioId::CombinedAppendix);
  auto obs = sample_observational(spec, 30000, false, 13);
  auto joint = sample_interventional(spec, {Regime::DoS1Z, 1}, 30000, 13);

  for (std::size_t i = 0; i < joint.size(); ++i) {
    CHECK(joint.s[i] == 1);
    CHECK(joint.z[i] == 1);
    // Exogenous layers are shared with the observational world.
    CHECK(joint.x[i] == obs.x[i]);
  }

  // Setting participation moves the treatment law: adherence under do(S=1)
  // differs from the pooled observational one.
  auto assign = sample_interventional(spec, {Regime::DoZ, 1}, 30000, 13);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    CHECK(assign.z[i] == 1);
    CHECK(assign.s[i] == obs.s[i]);  // participation is upstream of assignment
  }
  CHECK(mean_of(joint.a) != doctest::Approx(mean_of(assign.a)).epsilon(1e-4));
}

TEST_CASE("row-level coupling makes factual and counterfactual columns agree") {
  for (ScenarioId id : kAllScenarios) {
    CAPTURE(scenario_name(id));
    auto rep = consistency_check(default_spec(id), 10000, 31);
    CHECK(rep.rows == 10000);
    CHECK(rep.violations == 0);
    CHECK(rep.pass());
    CHECK(rep.first_counterexample.empty());
  }
}

TEST_CASE("breaking the coupling on purpose is detected") {
  auto rep = consistency_check(default_spec(ScenarioId::Fig2DirectEffect), 10000, 31, 32);
  CHECK(rep.violations > 0);
  CHECK_FALSE(rep.pass());
  CHECK_FALSE(rep.first_counterexample.empty());
}

TEST_CASE("observational frequencies match the enumerated law") {
  for (ScenarioId id : kAllScenarios) {
    CAPTURE(scenario_name(id));
    auto spec = default_spec(id);
    const CompiledScenario cs(spec);
    const std::size_t n = 200000;
    auto d = sample_observational(spec, n, false, 99);

    const double ps1 = cs.p_s1_marginal();
    const double se_s = std::sqrt(ps1 * (1 - ps1) / static_cast<double>(n));
    CHECK(std::abs(mean_of(d.s) - ps1) < 6 * se_s);

    // Covariate frequencies.
    std::vector<double> freq(spec.x_probs.size(), 0.0);
    for (auto v : d.x) freq[v] += 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < freq.size(); ++k) {
      const double p = spec.x_probs[k];
      CHECK(std::abs(freq[k] - p) < 6 * std::sqrt(p * (1 - p) / static_cast<double>(n)));
    }

    // Trial assignment share among participants.
    std::size_t n1 = 0, z1 = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.s[i] == 1) {
        ++n1;
        z1 += d.z[i] == 1;
      }
    const double pz = static_cast<double>(z1) / static_cast<double>(n1);
    CHECK(std::abs(pz - spec.trial_assign_prob) <
          6 * std::sqrt(0.25 / static_cast<double>(n1)));
  }
}

TEST_CASE("separate strata draws hit their quotas with the right inner law") {
  auto spec = default_spec(ScenarioId::Fig2DirectEffect);
  auto d = sample_non_nested(spec, 30000, 20000, false, 41);
  CHECK(d.size() == 50000);
  CHECK(d.provenance.non_nested);

  std::size_t participants = 0;
  for (auto v : d.s) participants += v == 1;
  CHECK(participants == 30000);

  // Participant stratum behaves like the trial: assignment is a fair coin.
  std::size_t z1 = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.s[i] == 1) z1 += d.z[i] == 1;
  CHECK(std::abs(static_cast<double>(z1) / 30000.0 - 0.5) < 6 * std::sqrt(0.25 / 30000.0));

  // Masked strata still expose covariates for every row.
  auto masked = sample_non_nested(spec, 1000, 1000, true, 41);
  for (std::size_t i = 0; i < masked.size(); ++i) {
    CHECK(masked.x[i] >= 0);
    if (masked.s[i] == 0) CHECK(masked.y[i] == kNA);
  }

  CHECK(same_columns(sample_non_nested(spec, 500, 500, false, 8),
                     sample_non_nested(spec, 500, 500, false, 8)));
}

TEST_CASE("regime tags and display strings round-trip") {
  const RegimeSpec obs{Regime::Observational, -1};
  const RegimeSpec dz0{Regime::DoZ, 0};
  const RegimeSpec ds1z1{Regime::DoS1Z, 1};

  CHECK(regime_tag(obs) == "obs");
  CHECK(regime_tag(dz0) == "do_z0");
  CHECK(regime_tag(ds1z1) == "do_s1_z1");
  CHECK(regime_display(ds1z1) == "do(S=1,Z=1)");

  for (const auto& r : {obs, dz0, ds1z1}) {
    CHECK(regime_from_tag(regime_tag(r)) == r);
    CHECK(regime_from_tag(regime_display(r)) == r);
  }
  CHECK_THROWS_AS(regime_from_tag("do_q1"), Error);
}

TEST_CASE("dataset CSV round-trips values and missingness") {
  auto spec = default_spec(ScenarioId::Fig3CommonCauses);
  for (bool mask : {false, true}) {
    auto d = sample_observational(spec, 500, mask, 19);
    auto text = dataset_to_csv(d);
    CHECK(text.rfind("x,s,z,a,y\n", 0) == 0);
    if (mask) CHECK(text.find("NA") != std::string::npos);

    auto back = dataset_from_csv(text);
    CHECK(same_columns(d, back));
    CHECK(back.provenance.masked == mask);
  }

  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "transportlab_rows.csv";
  auto d = sample_observational(spec, 200, true, 23);
  save_dataset_csv(d, path.string());
  CHECK(same_columns(load_dataset_csv(path.string()), d));
  fs::remove(path);

  CHECK_THROWS_AS(dataset_from_csv("x,s\n1,2\n"), Error);
  CHECK_THROWS_AS(dataset_from_csv("x,s,z,a,y\n1,2\n"), Error);
  CHECK_THROWS_AS(load_dataset_csv("/nonexistent/rows.csv"), Error);
}
