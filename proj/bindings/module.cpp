// Python face of the library: registries, graph surgery and separation
// queries on interchange text, spec JSON plumbing, sampling, exact oracles,
// estimation, and the verification sweep. Everything crosses the boundary as
// plain strings, numbers, and lists; structured results go through JSON.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "transportlab/errors.hpp"
#include "transportlab/estimators.hpp"
#include "transportlab/graph.hpp"
#include "transportlab/oracle.hpp"
#include "transportlab/runconfig.hpp"
#include "transportlab/sample.hpp"
#include "transportlab/scenarios.hpp"
#include "transportlab/spec.hpp"
#include "transportlab/verify.hpp"

namespace py = pybind11;
using namespace transportlab;

namespace {

std::vector<Intervention> parse_do_list(const std::vector<std::string>& entries) {
  std::vector<Intervention> ivs;
  for (const std::string& piece : entries) {
    const auto eq = piece.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == piece.size())
      fail(Err::ParseError, "do entries look like S=1 or Z=z: " + piece);
    ivs.push_back({piece.substr(0, eq), piece.substr(eq + 1)});
  }
  return ivs;
}

CausalGraph graph_for(const std::string& structure, const std::vector<std::string>& do_list) {
  CausalGraph g = scenario_graph(structure_from_name(structure));
  if (!do_list.empty()) g = split_intervene(g, parse_do_list(do_list));
  return g;
}

ScenarioSpec spec_of(const std::string& spec_json) { return spec_from_json_text(spec_json); }

Estimand estimand_of(const std::string& kind, const std::string& population, int z, int z_alt) {
  Estimand e{kind_from_name(kind), population_from_name(population), z, z_alt};
  validate_estimand(e);
  return e;
}

Dataset sample_any(const ScenarioSpec& spec, std::size_t n, std::uint64_t seed,
                   const std::string& regime, bool mask, int jobs) {
  const RegimeSpec r = regime_from_tag(regime);
  if (r.regime == Regime::Observational) return sample_observational(spec, n, mask, seed, jobs);
  return sample_interventional(spec, r, n, seed, jobs);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "trial transport lab: graphs, exact oracles, estimators, verification";

  py::register_exception<Error>(m, "CoreError");

  // ------------------------------------------------------------ registries
  m.def("scenarios", [] {
    std::vector<std::string> out;
    for (ScenarioId id : {ScenarioId::Fig1PerfectAdherence, ScenarioId::Fig2DirectEffect,
                          ScenarioId::Fig3CommonCauses, ScenarioId::CombinedAppendix})
      out.emplace_back(scenario_name(id));
    return out;
  });
  m.def("structures", [] {
    std::vector<std::string> out;
    for (StructureId id : {StructureId::Fig1, StructureId::Fig2, StructureId::Fig3,
                           StructureId::Combined, StructureId::TrialConditional})
      out.emplace_back(structure_name(id));
    return out;
  });
  m.def(
      "structure_of",
      [](const std::string& scenario) {
        return std::string(structure_name(structure_of(scenario_from_name(scenario))));
      },
      py::arg("scenario"));

  // ------------------------------------------------------------------ graphs
  m.def(
      "graph_text",
      [](const std::string& structure, const std::vector<std::string>& do_list) {
        return emit_graph(graph_for(structure, do_list));
      },
      py::arg("structure"), py::arg("do_list") = std::vector<std::string>{},
      "Node-splitting interchange text; do_list entries like 'S=1' or 'Z=z'.");
  m.def(
      "graph_dot",
      [](const std::string& structure, const std::vector<std::string>& do_list) {
        return to_dot(graph_for(structure, do_list));
      },
      py::arg("structure"), py::arg("do_list") = std::vector<std::string>{});
  m.def(
      "d_separated",
      [](const std::string& graph_text, const std::string& query) {
        return d_separated(parse_graph(graph_text), parse_query(query));
      },
      py::arg("graph_text"), py::arg("query"),
      "Query text like 'Y^z _||_ S | X, A^z' against interchange graph text.");
  m.def(
      "open_paths",
      [](const std::string& graph_text, const std::string& a, const std::string& b,
         const std::vector<std::string>& conditioning) {
        return open_paths(parse_graph(graph_text), a, b, conditioning);
      },
      py::arg("graph_text"), py::arg("a"), py::arg("b"),
      py::arg("conditioning") = std::vector<std::string>{});
  m.def(
      "independence_claims",
      [](const std::string& structure) {
        py::list out;
        for (const IndependenceClaim& c :
             independence_table(structure_from_name(structure))) {
          py::dict d;
          d["claim_id"] = c.claim_id;
          d["structure"] = std::string(structure_name(c.structure));
          d["variant"] = std::string(variant_name(c.variant));
          d["query"] = render_query(c.query);
          d["expected_separated"] = c.expected_separated;
          d["note"] = c.note;
          out.append(std::move(d));
        }
        return out;
      },
      py::arg("structure"));

  // ------------------------------------------------------------------- specs
  m.def(
      "default_spec_json",
      [](const std::string& scenario) {
        return spec_to_json_text(default_spec(scenario_from_name(scenario)));
      },
      py::arg("scenario"));
  m.def(
      "override_spec_json",
      [](const std::string& spec_json, const std::vector<std::string>& overrides) {
        ScenarioSpec spec = spec_of(spec_json);
        for (const std::string& ov : overrides) apply_override(spec, ov);
        validate_spec(spec);
        return spec_to_json_text(spec);
      },
      py::arg("spec_json"), py::arg("overrides"),
      "Apply 'name=value' edits and revalidate; returns the new spec JSON.");
  m.def(
      "validate_spec_json",
      [](const std::string& spec_json) { validate_spec(spec_of(spec_json)); },
      py::arg("spec_json"));

  // ----------------------------------------------------------------- oracles
  m.def(
      "oracle_value",
      [](const std::string& spec_json, const std::string& kind, const std::string& population,
         int z, int z_alt) {
        return oracle_truth(spec_of(spec_json), estimand_of(kind, population, z, z_alt));
      },
      py::arg("spec_json"), py::arg("kind"), py::arg("population"), py::arg("z"),
      py::arg("z_alt") = 0, "Exact counterfactual mean/contrast by enumeration.");
  m.def(
      "functional_value",
      [](const std::string& spec_json, const std::string& kind, const std::string& population,
         int z, int z_alt) {
        return functional_truth(spec_of(spec_json), estimand_of(kind, population, z, z_alt));
      },
      py::arg("spec_json"), py::arg("kind"), py::arg("population"), py::arg("z"),
      py::arg("z_alt") = 0, "Exact asymptotic value of the observational plug-in.");
  m.def(
      "identified",
      [](const std::string& spec_json, const std::string& kind, const std::string& population,
         int z, int z_alt) {
        return estimand_identified(spec_of(spec_json), estimand_of(kind, population, z, z_alt));
      },
      py::arg("spec_json"), py::arg("kind"), py::arg("population"), py::arg("z"),
      py::arg("z_alt") = 0);

  // ---------------------------------------------------------------- sampling
  m.def(
      "sample_columns",
      [](const std::string& spec_json, std::size_t n, std::uint64_t seed,
         const std::string& regime, bool mask, int jobs) {
        const Dataset d = sample_any(spec_of(spec_json), n, seed, regime, mask, jobs);
        py::dict out;
        const auto column = [](const std::vector<std::int8_t>& v) {
          py::list col;
          for (std::int8_t x : v) col.append(static_cast<int>(x));
          return col;
        };
        out["x"] = column(d.x);
        out["s"] = column(d.s);
        out["z"] = column(d.z);
        out["a"] = column(d.a);
        out["y"] = column(d.y);
        return out;
      },
      py::arg("spec_json"), py::arg("n"), py::arg("seed"), py::arg("regime") = "obs",
      py::arg("mask") = false, py::arg("jobs") = 1,
      "Columns as lists of ints; masked cells are -1. Regimes: obs, do_z0/1, do_s1_z0/1.");
  m.def(
      "dataset_csv",
      [](const std::string& spec_json, std::size_t n, std::uint64_t seed,
         const std::string& regime, bool mask, int jobs) {
        return dataset_to_csv(sample_any(spec_of(spec_json), n, seed, regime, mask, jobs));
      },
      py::arg("spec_json"), py::arg("n"), py::arg("seed"), py::arg("regime") = "obs",
      py::arg("mask") = false, py::arg("jobs") = 1);
  m.def(
      "consistency",
      [](const std::string& spec_json, std::size_t n, std::uint64_t seed) {
        const ConsistencyReport r = consistency_check(spec_of(spec_json), n, seed);
        py::dict out;
        out["rows"] = r.rows;
        out["violations"] = r.violations;
        out["first_counterexample"] = r.first_counterexample;
        out["pass"] = r.pass();
        return out;
      },
      py::arg("spec_json"), py::arg("n"), py::arg("seed"),
      "Row-level agreement of observed and interventional draws under shared noise.");

  // -------------------------------------------------------------- estimation
  m.def(
      "estimate_json",
      [](const std::string& spec_json, std::size_t n, std::uint64_t seed,
         const std::string& kind, const std::string& population, int z, int z_alt,
         const std::string& estimator, int replicates, bool laplace, int jobs) {
        const ScenarioSpec spec = spec_of(spec_json);
        const Dataset d = sample_observational(spec, n, false, seed, jobs);
        EstimateReport rep = estimate(d, estimand_of(kind, population, z, z_alt),
                                      estimator_from_name(estimator),
                                      BootstrapConfig{replicates, seed}, laplace);
        annotate_truth(rep, spec);
        return report_to_json_text(rep);
      },
      py::arg("spec_json"), py::arg("n"), py::arg("seed"), py::arg("kind"),
      py::arg("population"), py::arg("z"), py::arg("z_alt") = 0,
      py::arg("estimator") = "gformula", py::arg("replicates") = 200,
      py::arg("laplace") = false, py::arg("jobs") = 1,
      "Draw an observational cohort, estimate, annotate with the exact truths.");
  m.def(
      "estimate_csv_json",
      [](const std::string& csv_text, const std::string& kind, const std::string& population,
         int z, int z_alt, const std::string& estimator, int replicates, bool laplace) {
        const EstimateReport rep =
            estimate(dataset_from_csv(csv_text), estimand_of(kind, population, z, z_alt),
                     estimator_from_name(estimator), BootstrapConfig{replicates, 7}, laplace);
        return report_to_json_text(rep);
      },
      py::arg("csv_text"), py::arg("kind"), py::arg("population"), py::arg("z"),
      py::arg("z_alt") = 0, py::arg("estimator") = "gformula", py::arg("replicates") = 200,
      py::arg("laplace") = false,
      "Estimate from a 'x,s,z,a,y' CSV cohort (no truth columns attached).");

  // ------------------------------------------------------------ verification
  m.def(
      "verify_json",
      [](const std::vector<std::string>& scenarios, std::int64_t n,
         const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& overrides,
         std::size_t consistency_n, int replicates, int jobs) {
        VerifyConfig cfg;
        for (const std::string& s : scenarios) cfg.scenarios.push_back(scenario_from_name(s));
        cfg.n = n;
        if (!seeds.empty()) cfg.seeds = seeds;
        cfg.overrides = overrides;
        cfg.consistency_n = consistency_n;
        cfg.bootstrap_replicates = replicates;
        cfg.jobs = jobs;
        return verify_to_json_text(run_verify(cfg));
      },
      py::arg("scenarios") = std::vector<std::string>{}, py::arg("n") = 1'000'000,
      py::arg("seeds") = std::vector<std::uint64_t>{}, py::arg("overrides") = std::vector<std::string>{},
      py::arg("consistency_n") = 10'000, py::arg("replicates") = 200, py::arg("jobs") = 0,
      "Full claim matrix as JSON; empty scenario list means all of them.");
}
