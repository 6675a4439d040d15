// Acceptance gate: nine numbered criteria, one PASS/FAIL line each.
// Usage: acceptance <1..9|all>. Exit 0 iff every requested criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "transportlab/errors.hpp"
#include "transportlab/estimators.hpp"
#include "transportlab/graph.hpp"
#include "transportlab/oracle.hpp"
#include "transportlab/sample.hpp"
#include "transportlab/scenarios.hpp"
#include "transportlab/spec.hpp"
#include "transportlab/verify.hpp"

using namespace transportlab;

namespace {

constexpr ScenarioId kAll[] = {ScenarioId::Fig1PerfectAdherence, ScenarioId::Fig2DirectEffect,
                               ScenarioId::Fig3CommonCauses, ScenarioId::CombinedAppendix};
const std::vector<std::uint64_t> kSeeds = {101, 102, 103, 104, 105};

int hw_jobs() {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ContTable sampled_table(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed) {
  return ContTable::from_dataset(sample_observational(spec, n, false, seed, hw_jobs()));
}

struct Checked {
  double point = 0.0;
  double mc_se = 0.0;
  double bias = 0.0;  // |point - oracle|
  double asym = 0.0;  // |functional - oracle|
};

Checked checked_estimate(const ContTable& t, const ScenarioSpec& spec, const Estimand& e,
                         EstimatorId est, std::uint64_t seed) {
  EstimateReport rep = estimate(t, e, est, BootstrapConfig{200, seed});
  annotate_truth(rep, spec);
  return {rep.point, rep.mc_se, *rep.abs_bias, *rep.asymptotic_bias};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------- criteria

// Every transcribed separation/connection claim reproduced exactly on the
// mechanically split graphs, across all five registered structures.
bool criterion_1(std::string& note) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto table = independence_table_all();
  std::set<StructureId> structures;
  std::size_t checked = 0;
  for (const IndependenceClaim& c : table) {
    const CausalGraph g = variant_graph(c.structure, c.variant);
    if (d_separated(g, c.query) != c.expected_separated) {
      note = "claim " + c.claim_id + " disagrees with the graph";
      return false;
    }
    structures.insert(c.structure);
    ++checked;
  }
  const double el = seconds_since(t0);
  note = std::to_string(checked) + " claims over " + std::to_string(structures.size()) +
         " structures, " + fmt(el) + "s";
  return checked >= 10 && structures.size() == 5 && el < 1.0;
}

// Every separation claim holds in the exactly enumerated law (CMI < 1e-12),
// as does the local Markov property of every variant slice.
bool criterion_2(std::string& note) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (ScenarioId id : kAll) {
    const ScenarioSpec spec = default_spec(id);
    std::vector<StructureId> sids = {structure_of(id)};
    if (id == ScenarioId::CombinedAppendix) sids.push_back(StructureId::TrialConditional);
    for (StructureId sid : sids) {
      for (const IndependenceClaim& c : independence_table(sid)) {
        if (!c.expected_separated) continue;
        for (int z = 0; z < 2; ++z) {
          worst = std::max(worst, claim_cmi(spec, c, z));
          ++checked;
        }
      }
    }
    const std::pair<GraphVariant, int> slices[] = {{GraphVariant::Dag, 1},
                                                   {GraphVariant::AssignSwig, 0},
                                                   {GraphVariant::AssignSwig, 1},
                                                   {GraphVariant::JointSwig, 0},
                                                   {GraphVariant::JointSwig, 1}};
    for (const auto& [v, z] : slices)
      for (const MarkovCheck& m : local_markov_cmis(spec, v, z)) {
        worst = std::max(worst, m.cmi);
        ++checked;
      }
  }
  const double el = seconds_since(t0);
  note = std::to_string(checked) + " independences, worst CMI " + fmt(worst) + ", " + fmt(el) +
         "s";
  return checked > 0 && worst < 1e-12 && el < 10.0;
}

// Perfect adherence: both estimators hit the oracle for both claim families,
// both arms, every seed, at n = 1e6.
bool criterion_3(std::string& note) {
  const auto t0 = std::chrono::steady_clock::now();
  const ScenarioSpec spec = default_spec(ScenarioId::Fig1PerfectAdherence);
  double worst_ratio = 0.0;
  for (std::uint64_t seed : kSeeds) {
    const ContTable t = sampled_table(spec, 1'000'000, seed);
    for (EstimatorId est : {EstimatorId::GFormula, EstimatorId::IPW}) {
      for (EstimandKind kind : {EstimandKind::MeanJoint, EstimandKind::MeanAssign}) {
        for (int z = 0; z < 2; ++z) {
          const Checked c =
              checked_estimate(t, spec, {kind, Population::Target, z, 0}, est, seed);
          worst_ratio = std::max(worst_ratio, c.bias / (4.0 * c.mc_se));
          if (c.bias >= 4.0 * c.mc_se) {
            note = std::string(estimator_name(est)) + " " +
                   std::string(kind_name(kind)) + " z=" + std::to_string(z) + " seed " +
                   std::to_string(seed) + ": bias " + fmt(c.bias) + " >= 4*mc_se " +
                   fmt(4.0 * c.mc_se);
            return false;
          }
        }
      }
    }
  }
  const double el = seconds_since(t0);
  note = "40 estimates within 4*mc_se (worst at " + fmt(100 * worst_ratio) +
         "% of allowance), " + fmt(el) + "s";
  return el < 60.0;
}

// Direct effect: holding-assignment estimands agree; assignment-only ones are
// biased by more than max(5*mc_se, 0.02), the bias equals the enumerated
// asymptotic gap within 10%, and severing the direct edge restores agreement.
bool criterion_4(std::string& note) {
  const ScenarioSpec spec = default_spec(ScenarioId::Fig2DirectEffect);
  ScenarioSpec severed = spec;
  apply_override(severed, "beta_S_on_A=0");

  std::vector<double> gap_ratio;
  for (std::uint64_t seed : kSeeds) {
    const ContTable t = sampled_table(spec, 1'000'000, seed);
    const ContTable ts = sampled_table(severed, 1'000'000, seed);
    for (EstimatorId est : {EstimatorId::GFormula, EstimatorId::IPW}) {
      for (int z = 0; z < 2; ++z) {
        const Estimand joint{EstimandKind::MeanJoint, Population::Target, z, 0};
        const Estimand assign{EstimandKind::MeanAssign, Population::Target, z, 0};
        const Checked cj = checked_estimate(t, spec, joint, est, seed);
        if (cj.bias >= 4.0 * cj.mc_se) {
          note = "holding-assignment estimate off oracle: bias " + fmt(cj.bias);
          return false;
        }
        const Checked ca = checked_estimate(t, spec, assign, est, seed);
        if (ca.bias <= std::max(5.0 * ca.mc_se, 0.02)) {
          note = "assignment-only bias not demonstrated: " + fmt(ca.bias) + " at z=" +
                 std::to_string(z);
          return false;
        }
        gap_ratio.push_back(ca.bias / ca.asym);
        const Checked cr = checked_estimate(ts, severed, assign, est, seed);
        if (cr.bias >= 4.0 * cr.mc_se) {
          note = "severing the direct edge did not restore agreement: bias " + fmt(cr.bias);
          return false;
        }
      }
    }
  }
  const double med = median_of(gap_ratio);
  note = "bias present and median gap at " + fmt(100 * med) + "% of the enumerated asymptote";
  return std::abs(med - 1.0) <= 0.10;
}

// Shared causes: transport bias exceeds max(5*mc_se, 0.02) at n = 1e6, its
// 20-seed median moves < 25% from n = 1e5 to 1e6, and severing the
// participation fork restores agreement.
bool criterion_5(std::string& note) {
  std::ostringstream detail;
  for (ScenarioId id : {ScenarioId::Fig3CommonCauses, ScenarioId::CombinedAppendix}) {
    const ScenarioSpec spec = default_spec(id);
    ScenarioSpec severed = spec;
    apply_override(severed, "gamma_U1_on_S=0");
    const Estimand joint1{EstimandKind::MeanJoint, Population::Target, 1, 0};

    for (std::uint64_t seed : kSeeds) {
      const ContTable t = sampled_table(spec, 1'000'000, seed);
      const ContTable ts = sampled_table(severed, 1'000'000, seed);
      for (int z = 0; z < 2; ++z) {
        const Estimand e{EstimandKind::MeanJoint, Population::Target, z, 0};
        const Checked c = checked_estimate(t, spec, e, EstimatorId::GFormula, seed);
        if (c.bias <= std::max(5.0 * c.mc_se, 0.02)) {
          note = std::string(scenario_name(id)) + " z=" + std::to_string(z) + " seed " +
                 std::to_string(seed) + ": bias " + fmt(c.bias) + " under threshold";
          return false;
        }
        const Checked cr = checked_estimate(ts, severed, e, EstimatorId::GFormula, seed);
        if (cr.bias >= 4.0 * cr.mc_se) {
          note = std::string(scenario_name(id)) + ": severed fork still biased " +
                 fmt(cr.bias);
          return false;
        }
      }
    }

    // Scale sweep: the gap is structural, so more data must not shrink it.
    const double truth = oracle_truth(spec, joint1);
    std::vector<double> small, big;
    for (std::uint64_t seed = 301; seed < 321; ++seed) {
      const ContTable t5 = sampled_table(spec, 100'000, seed);
      const ContTable t6 = sampled_table(spec, 1'000'000, seed);
      small.push_back(std::abs(
          point_estimate(t5, fit_nuisances(t5), Population::Target, EstimatorId::GFormula, 1) -
          truth));
      big.push_back(std::abs(
          point_estimate(t6, fit_nuisances(t6), Population::Target, EstimatorId::GFormula, 1) -
          truth));
    }
    const double m5 = median_of(small), m6 = median_of(big);
    const double change = std::abs(m6 - m5) / m5;
    if (change >= 0.25) {
      note = std::string(scenario_name(id)) + ": median bias moved " + fmt(100 * change) +
             "% from 1e5 to 1e6";
      return false;
    }
    detail << (detail.tellp() > 0 ? "; " : "") << scenario_name(id) << " median "
           << fmt(m5) << "->" << fmt(m6) << " (" << fmt(100 * change) << "%)";
  }
  note = "bias persists at scale: " + detail.str();
  return true;
}

// Subset estimands agree under the first two structures; the within-trial
// estimator agrees under every structure.
bool criterion_6(std::string& note) {
  double worst_ratio = 0.0;
  for (ScenarioId id : kAll) {
    const ScenarioSpec spec = default_spec(id);
    const bool subset_identified =
        id == ScenarioId::Fig1PerfectAdherence || id == ScenarioId::Fig2DirectEffect;
    for (std::uint64_t seed : kSeeds) {
      const ContTable t = sampled_table(spec, 1'000'000, seed);
      for (EstimatorId est : {EstimatorId::GFormula, EstimatorId::IPW}) {
        for (int z = 0; z < 2; ++z) {
          if (subset_identified) {
            const Checked c = checked_estimate(
                t, spec, {EstimandKind::MeanJoint, Population::NonRandomizedSubset, z, 0},
                est, seed);
            worst_ratio = std::max(worst_ratio, c.bias / (4.0 * c.mc_se));
            if (c.bias >= 4.0 * c.mc_se) {
              note = std::string(scenario_name(id)) + " subset z=" + std::to_string(z) +
                     ": bias " + fmt(c.bias) + " >= " + fmt(4.0 * c.mc_se);
              return false;
            }
          }
          const Checked tr = checked_estimate(
              t, spec, {EstimandKind::MeanAssign, Population::TrialPopulation, z, 0}, est,
              seed);
          worst_ratio = std::max(worst_ratio, tr.bias / (4.0 * tr.mc_se));
          if (tr.bias >= 4.0 * tr.mc_se) {
            note = std::string(scenario_name(id)) + " trial z=" + std::to_string(z) +
                   ": bias " + fmt(tr.bias) + " >= " + fmt(4.0 * tr.mc_se);
            return false;
          }
        }
      }
    }
  }
  note = "subset and within-trial estimates all inside 4*mc_se (worst at " +
         fmt(100 * worst_ratio) + "% of allowance)";
  return true;
}

// Saturated-table identity: the outcome-model and weighting plug-ins agree to
// 1e-10 on random tiny datasets, for all three population forms.
bool criterion_7(std::string& note) {
  std::mt19937 eng(20240817);
  std::uniform_int_distribution<int> nx_pick(1, 4), cell(-3, 6);
  std::size_t datasets = 0, agreements = 0;
  double worst = 0.0;
  while (datasets < 1000) {
    const int n_x = nx_pick(eng);
    ContTable t;
    t.n_x = n_x;
    t.s0.assign(n_x, 0);
    t.s1zy.assign(n_x * 4, 0);
    std::int64_t total = 0;
    for (int x = 0; x < n_x; ++x) {
      t.s0[x] = std::max(0, cell(eng));
      for (int k = 0; k < 4; ++k) t.s1zy[x * 4 + k] = std::max(0, cell(eng));
      total += t.n_at(x);
    }
    if (total == 0 || total > 50) continue;
    ++datasets;
    NuisanceTables nt;
    try {
      nt = fit_nuisances(t);
    } catch (const Error&) {
      continue;
    }
    for (Population pop : {Population::Target, Population::NonRandomizedSubset,
                           Population::TrialPopulation}) {
      for (int z = 0; z < 2; ++z) {
        double a = 0.0, b = 0.0;
        bool a_ok = true, b_ok = true;
        try {
          a = point_estimate(t, nt, pop, EstimatorId::GFormula, z);
        } catch (const Error&) {
          a_ok = false;
        }
        try {
          b = point_estimate(t, nt, pop, EstimatorId::IPW, z);
        } catch (const Error&) {
          b_ok = false;
        }
        if (a_ok != b_ok) {
          note = "estimators disagree about table admissibility";
          return false;
        }
        if (!a_ok) continue;
        ++agreements;
        worst = std::max(worst, std::abs(a - b));
        if (std::abs(a - b) > 1e-10) {
          note = "plug-ins differ by " + fmt(std::abs(a - b));
          return false;
        }
      }
    }
  }
  note = std::to_string(datasets) + " datasets, " + std::to_string(agreements) +
         " comparisons, worst |gf-ipw| " + fmt(worst);
  return agreements > 1000;
}

// Counterfactual consistency at n = 1e4 for every scenario, and byte-identical
// outputs when the same configuration is run again (or with more threads).
bool criterion_8(std::string& note) {
  for (ScenarioId id : kAll) {
    const ScenarioSpec spec = default_spec(id);
    const ConsistencyReport cr = consistency_check(spec, 10'000, 11);
    if (!cr.pass()) {
      note = std::string(scenario_name(id)) + ": " + std::to_string(cr.violations) +
             " consistency violations; first: " + cr.first_counterexample;
      return false;
    }
  }

  const ScenarioSpec spec = default_spec(ScenarioId::Fig2DirectEffect);
  const std::string csv1 = dataset_to_csv(sample_observational(spec, 20'000, true, 5, 1));
  const std::string csv2 = dataset_to_csv(sample_observational(spec, 20'000, true, 5, 4));
  if (csv1 != csv2) {
    note = "dataset bytes depend on the worker count";
    return false;
  }

  VerifyConfig vc;
  vc.scenarios = {ScenarioId::Fig1PerfectAdherence};
  vc.n = 20'000;
  vc.seeds = {101, 102};
  vc.consistency_n = 2'000;
  vc.bootstrap_replicates = 50;
  const VerifyReport r1 = run_verify(vc);
  const VerifyReport r2 = run_verify(vc);
  if (verify_to_csv(r1) != verify_to_csv(r2) ||
      verify_to_json_text(r1) != verify_to_json_text(r2)) {
    note = "verification outputs differ between identical runs";
    return false;
  }

  const ContTable t = ContTable::from_dataset(sample_observational(spec, 20'000, true, 5, 1));
  const Estimand e{EstimandKind::MeanJoint, Population::Target, 1, 0};
  const std::string j1 = report_to_json_text(estimate(t, e, EstimatorId::IPW, {200, 9}));
  const std::string j2 = report_to_json_text(estimate(t, e, EstimatorId::IPW, {200, 9}));
  if (j1 != j2) {
    note = "estimate reports differ between identical runs";
    return false;
  }
  note = "0 violations in 4 scenarios; dataset, verify, and estimate bytes stable";
  return true;
}

// The full verification sweep on shipped fixtures: everything passes, well
// inside the time budget.
bool criterion_9(std::string& note) {
  const auto t0 = std::chrono::steady_clock::now();
  const VerifyReport rep = run_verify(VerifyConfig{});
  const double el = seconds_since(t0);
  note = std::to_string(rep.rows.size() - static_cast<std::size_t>(rep.failures())) + "/" +
         std::to_string(rep.rows.size()) + " rows, " + fmt(el) + "s";
  if (!rep.all_pass()) {
    for (const VerdictRow& r : rep.rows)
      if (!r.pass) {
        note += "; first failure " + r.claim_id;
        break;
      }
  }
  return rep.all_pass() && el < 300.0;
}

using Criterion = bool (*)(std::string&);

struct Entry {
  int number;
  const char* label;
  Criterion fn;
};

const Entry kCriteria[] = {
    {1, "separation claims reproduced on split graphs", criterion_1},
    {2, "separation claims hold in the enumerated law", criterion_2},
    {3, "perfect-adherence estimates hit the oracle", criterion_3},
    {4, "direct-effect bias shown, quantified, and removable", criterion_4},
    {5, "shared-cause bias persists at scale and is removable", criterion_5},
    {6, "subset and within-trial estimands agree", criterion_6},
    {7, "plug-in estimators coincide on saturated tables", criterion_7},
    {8, "counterfactual consistency and byte-level determinism", criterion_8},
    {9, "full verification sweep passes in budget", criterion_9},
};

int run_one(const Entry& e) {
  std::string note;
  bool ok = false;
  try {
    ok = e.fn(note);
  } catch (const std::exception& ex) {
    ok = false;
    note = std::string("exception: ") + ex.what();
  }
  std::printf("criterion %d: %s  %s (%s)\n", e.number, ok ? "PASS" : "FAIL", e.label,
              note.c_str());
  std::fflush(stdout);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <1..9|all>\n");
    return 2;
  }
  const std::string arg = argv[1];
  if (arg == "all") {
    int failures = 0;
    for (const Entry& e : kCriteria) failures += run_one(e);
    if (failures) std::printf("%d criteria FAILED\n", failures);
    return failures ? 1 : 0;
  }
  const int number = std::atoi(arg.c_str());
  for (const Entry& e : kCriteria)
    if (e.number == number) return run_one(e);
  std::fprintf(stderr, "no criterion %s\n", arg.c_str());
  return 2;
}
