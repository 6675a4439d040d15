// Command-line front end: graph queries, dataset simulation, estimation
// pipelines, the verification claim matrix, and report assembly.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "transportlab/errors.hpp"
#include "transportlab/estimators.hpp"
#include "transportlab/graph.hpp"
#include "transportlab/oracle.hpp"
#include "transportlab/runconfig.hpp"
#include "transportlab/sample.hpp"
#include "transportlab/scenarios.hpp"
#include "transportlab/spec.hpp"
#include "transportlab/verify.hpp"

namespace fs = std::filesystem;
using namespace transportlab;

namespace {

// Options shared by simulate/estimate; flags given on the command line win
// over the config file.
struct PipelineFlags {
  std::string config_path;
  std::string scenario;
  std::optional<std::int64_t> n;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> seed;  // single-seed shorthand
  std::string design;
  std::optional<std::uint64_t> participants;
  std::optional<std::uint64_t> nonparticipants;
  bool mask = false;
  std::vector<std::string> sets;
  std::vector<std::string> estimand_tokens;
  std::vector<std::string> estimator_names;
  std::optional<int> replicates;
  bool laplace = false;
  std::string out;
  std::optional<int> jobs;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f, bool estimation) {
  cmd->add_option("--scenario", f.scenario, "registered scenario name or spec JSON path");
  cmd->add_option("--n", f.n, "rows per dataset (nested design)");
  cmd->add_option("--seeds", f.seeds, "dataset seeds")->delimiter(',');
  cmd->add_option("--design", f.design, "nested | non_nested");
  cmd->add_option("--participants", f.participants, "non-nested participant stratum size");
  cmd->add_option("--nonparticipants", f.nonparticipants,
                  "non-nested non-participant stratum size");
  cmd->add_flag("--mask", f.mask, "record z/a/y only for participants");
  cmd->add_option("--set", f.sets, "override a spec value, name=value (repeatable)");
  if (estimation) {
    cmd->add_option("--estimand", f.estimand_tokens,
                    "population.kind.zK or population.kind.z1v0 (repeatable; "
                    "default: the full grid legal for the design)");
    cmd->add_option("--estimators", f.estimator_names, "subset of gformula,ipw,ipw_normalized")
        ->delimiter(',');
    cmd->add_option("--replicates", f.replicates, "bootstrap replicates");
    cmd->add_flag("--laplace", f.laplace, "add-half smoothing for nuisance tables");
  }
}

// "target.mean_joint.z1" or "trial.contrast_assign.z1v0" (the form
// estimand_token prints).
Estimand estimand_from_token(const std::string& token) {
  std::vector<std::string> parts;
  std::stringstream ss(token);
  std::string p;
  while (std::getline(ss, p, '.')) parts.push_back(p);
  if (parts.size() != 3) fail(Err::InvalidEstimand, "estimand token needs 3 parts: " + token);
  Estimand e;
  e.population = population_from_name(parts[0]);
  e.kind = kind_from_name(parts[1]);
  std::string arm = parts[2];
  if (arm.empty() || arm[0] != 'z')
    fail(Err::InvalidEstimand, "estimand arm must start with z: " + token);
  arm.erase(0, 1);
  const auto v = arm.find('v');
  try {
    if (v == std::string::npos) {
      e.z = std::stoi(arm);
    } else {
      e.z = std::stoi(arm.substr(0, v));
      e.z_alt = std::stoi(arm.substr(v + 1));
    }
  } catch (const std::exception&) {
    fail(Err::InvalidEstimand, "bad arm in estimand token: " + token);
  }
  validate_estimand(e);
  return e;
}

RunConfig merge_config(const PipelineFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_run_config(f.config_path);
  if (!f.scenario.empty()) cfg.scenario = f.scenario;
  if (f.n) cfg.n = *f.n;
  if (!f.seeds.empty()) cfg.seeds = f.seeds;
  if (f.seed) cfg.seeds = {*f.seed};
  if (!f.design.empty()) cfg.design = design_from_name(f.design);
  if (f.participants) cfg.strata_participants = *f.participants;
  if (f.nonparticipants) cfg.strata_nonparticipants = *f.nonparticipants;
  if (f.mask) cfg.mask_nonparticipants = true;
  if (!f.sets.empty())
    cfg.overrides.insert(cfg.overrides.end(), f.sets.begin(), f.sets.end());
  if (!f.estimand_tokens.empty()) {
    cfg.estimands.clear();
    for (const auto& t : f.estimand_tokens) cfg.estimands.push_back(estimand_from_token(t));
  }
  if (!f.estimator_names.empty()) {
    cfg.estimators.clear();
    for (const auto& nm : f.estimator_names) cfg.estimators.push_back(estimator_from_name(nm));
  }
  if (f.replicates) cfg.bootstrap_replicates = *f.replicates;
  if (f.laplace) cfg.laplace = true;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.jobs) cfg.jobs = *f.jobs;
  validate_run_config(cfg);
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Err::IoError, "cannot write " + path);
  out << content;
  if (!out) fail(Err::IoError, "failed writing " + path);
}

// ----------------------------------------------------------------- graph

int cmd_graph(const std::string& structure, const std::string& do_list,
              const std::vector<std::string>& queries, bool want_paths, bool want_dot,
              bool want_table) {
  const StructureId sid = structure_from_name(structure);
  CausalGraph g = scenario_graph(sid);

  std::vector<Intervention> ivs;
  if (!do_list.empty()) {
    std::stringstream ss(do_list);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      const auto eq = piece.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == piece.size())
        fail(Err::ParseError, "--do entries look like S=1 or Z=z: " + piece);
      ivs.push_back({piece.substr(0, eq), piece.substr(eq + 1)});
    }
    g = split_intervene(g, ivs);
  }

  if (want_dot) {
    std::cout << to_dot(g);
  } else {
    std::cout << emit_graph(g);
  }

  int rc = 0;
  for (const std::string& qtext : queries) {
    const DSepQuery q = parse_query(qtext);
    const bool sep = d_separated(g, q);
    std::cout << "\nquery: " << render_query(q) << "\n"
              << (sep ? "SEPARATED" : "CONNECTED") << "\n";
    if (!sep || want_paths) {
      std::size_t shown = 0;
      for (const auto& a : q.set_a)
        for (const auto& b : q.set_b)
          for (const auto& path : open_paths(g, a, b, q.conditioning)) {
            std::cout << "  open: " << path << "\n";
            ++shown;
          }
      if (shown == 0) std::cout << "  (no open paths)\n";
    }
  }

  if (want_table) {
    std::cout << "\nclaimed (in)dependences for " << structure_name(sid) << ":\n";
    for (const IndependenceClaim& c : independence_table(sid)) {
      const CausalGraph vg = variant_graph(c.structure, c.variant);
      const bool sep = d_separated(vg, c.query);
      const bool ok = sep == c.expected_separated;
      if (!ok) rc = 1;
      std::cout << (ok ? "PASS  " : "FAIL  ") << c.claim_id << "  [" << variant_name(c.variant)
                << "]  " << render_query(c.query) << "  expected "
                << (c.expected_separated ? "separated" : "connected") << ", got "
                << (sep ? "separated" : "connected") << "\n";
    }
  }
  return rc;
}

// -------------------------------------------------------------- simulate

std::vector<RegimeSpec> parse_regimes(const std::vector<std::string>& tags) {
  std::vector<RegimeSpec> out;
  for (const std::string& t : tags) {
    if (t == "all") {
      out.push_back({Regime::Observational, 0});
      for (int z : {0, 1}) out.push_back({Regime::DoZ, z});
      for (int z : {0, 1}) out.push_back({Regime::DoS1Z, z});
    } else {
      out.push_back(regime_from_tag(t));
    }
  }
  return out;
}

int cmd_simulate(const RunConfig& cfg, const std::vector<std::string>& regime_tags) {
  const ScenarioSpec spec = resolve_scenario(cfg);
  const std::vector<RegimeSpec> regimes =
      parse_regimes(regime_tags.empty() ? std::vector<std::string>{"obs"} : regime_tags);
  if (cfg.design == TrialDesign::NonNested)
    for (const RegimeSpec& r : regimes)
      if (r.regime != Regime::Observational)
        fail(Err::InvalidSpec, "non_nested design draws observational strata only");

  fs::create_directories(cfg.output_dir);
  for (std::uint64_t seed : cfg.seeds) {
    for (const RegimeSpec& r : regimes) {
      Dataset d;
      std::string tag;
      if (cfg.design == TrialDesign::NonNested) {
        d = sample_non_nested(spec, cfg.strata_participants, cfg.strata_nonparticipants,
                              cfg.mask_nonparticipants, seed);
        tag = "nonnested";
      } else if (r.regime == Regime::Observational) {
        d = sample_observational(spec, static_cast<std::size_t>(cfg.n),
                                 cfg.mask_nonparticipants, seed, cfg.jobs);
        tag = regime_tag(r);
      } else {
        d = sample_interventional(spec, r, static_cast<std::size_t>(cfg.n), seed, cfg.jobs);
        tag = regime_tag(r);
      }
      const fs::path path = fs::path(cfg.output_dir) /
                            (std::string(scenario_name(spec.id)) + ".seed" +
                             std::to_string(seed) + "." + tag + ".csv");
      save_dataset_csv(d, path.string());
      std::cout << path.string() << "  (" << d.size() << " rows)\n";
    }
  }
  return 0;
}

// -------------------------------------------------------------- estimate

int cmd_estimate(const RunConfig& cfg) {
  const ScenarioSpec spec = resolve_scenario(cfg);
  const std::vector<Estimand> estimands = resolve_estimands(cfg);
  for (const Estimand& e : estimands)
    if (cfg.design == TrialDesign::NonNested && e.population == Population::Target)
      fail(Err::InvalidEstimand,
           "non_nested design cannot address the target population: separately drawn "
           "strata carry no participation margin");

  fs::create_directories(cfg.output_dir);
  std::vector<EstimateReport> reports;
  for (std::uint64_t seed : cfg.seeds) {
    Dataset d;
    if (cfg.design == TrialDesign::NonNested) {
      d = sample_non_nested(spec, cfg.strata_participants, cfg.strata_nonparticipants,
                            cfg.mask_nonparticipants, seed);
    } else {
      d = sample_observational(spec, static_cast<std::size_t>(cfg.n),
                               cfg.mask_nonparticipants, seed, cfg.jobs);
    }
    const ContTable table = ContTable::from_dataset(d);
    const BootstrapConfig bs{cfg.bootstrap_replicates, seed};
    for (const Estimand& e : estimands) {
      for (EstimatorId est : cfg.estimators) {
        EstimateReport rep = estimate(table, e, est, bs, cfg.laplace);
        rep.n = d.size();
        rep.seed = seed;
        rep.scenario = std::string(scenario_name(spec.id));
        annotate_truth(rep, spec);
        rep.replicate_values.clear();
        reports.push_back(std::move(rep));
      }
    }
  }

  std::string csv = reports_csv_header();
  nlohmann::json arr = nlohmann::json::array();
  for (const EstimateReport& rep : reports) {
    csv += report_to_csv_row(rep);
    arr.push_back(nlohmann::json::parse(report_to_json_text(rep)));
  }
  const fs::path csv_path = fs::path(cfg.output_dir) / "estimates.csv";
  const fs::path json_path = fs::path(cfg.output_dir) / "estimates.json";
  write_file(csv_path.string(), csv);
  write_file(json_path.string(), arr.dump(2) + "\n");

  std::cout << std::left;
  for (const EstimateReport& rep : reports) {
    std::ostringstream line;
    line.precision(6);
    line << rep.scenario << " seed=" << rep.seed << " " << estimand_token(rep.estimand) << " "
         << estimator_name(rep.estimator) << ": point=" << rep.point << " mc_se=" << rep.mc_se;
    if (rep.oracle) line << " oracle=" << *rep.oracle;
    if (rep.abs_bias) line << " |bias|=" << *rep.abs_bias;
    std::cout << line.str() << "\n";
  }
  std::cout << "wrote " << csv_path.string() << " and " << json_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- verify

int cmd_verify(const std::string& what, VerifyConfig vc, const std::string& out_dir) {
  if (!what.empty() && what != "all") vc.scenarios = {scenario_from_name(what)};
  const VerifyReport rep = run_verify(vc);
  std::cout << verify_to_text(rep);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path csv_path = fs::path(out_dir) / "verdict.csv";
    const fs::path json_path = fs::path(out_dir) / "verdict.json";
    write_file(csv_path.string(), verify_to_csv(rep));
    write_file(json_path.string(), verify_to_json_text(rep));
    std::cout << "wrote " << csv_path.string() << " and " << json_path.string() << "\n";
  }
  return rep.all_pass() ? 0 : 1;
}

// ---------------------------------------------------------------- report

std::string csv_cell(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return "";
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  std::ostringstream os;
  os.precision(12);
  if (v.is_number_float()) os << v.get<double>();
  else os << v;
  return os.str();
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_file) {
  std::vector<fs::path> files;
  for (const std::string& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.path().extension() == ".json") found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) fail(Err::IoError, "no report JSON files found");

  std::string csv = reports_csv_header();
  std::size_t rows = 0;
  for (const fs::path& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) fail(Err::IoError, "cannot open " + f.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(Err::ParseError, f.string() + " is not valid JSON: " + e.what());
    }
    const auto emit = [&](const nlohmann::json& r) {
      if (!r.is_object() || !r.contains("estimand")) return;  // not an estimate report
      const auto& e = r.at("estimand");
      csv += csv_cell(r, "scenario") + ',' + csv_cell(e, "population") + ',' +
             csv_cell(e, "kind") + ',' + csv_cell(e, "z") + ',' + csv_cell(e, "z_alt") + ',' +
             csv_cell(r, "estimator") + ',' + csv_cell(r, "point") + ',' +
             csv_cell(r, "mc_se") + ',' + csv_cell(r, "oracle") + ',' +
             csv_cell(r, "abs_bias") + ',' + csv_cell(r, "asymptotic_value") + ',' +
             csv_cell(r, "asymptotic_bias") + ',' + csv_cell(r, "n") + ',' +
             csv_cell(r, "seed") + '\n';
      ++rows;
    };
    if (j.is_array())
      for (const auto& r : j) emit(r);
    else
      emit(j);
  }
  if (rows == 0) fail(Err::ParseError, "no estimate reports in the given files");
  if (out_file.empty()) {
    std::cout << csv;
  } else {
    write_file(out_file, csv);
    std::cout << "wrote " << out_file << " (" << rows << " reports)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal-graph identification engine and SCM verification lab"};
  app.require_subcommand(1);

  // Global flags; subcommands fall through to them, so position is free.
  std::string g_config, g_out;
  std::optional<std::uint64_t> g_seed;
  std::optional<int> g_jobs;
  app.add_option("--config", g_config, "run config JSON file (explicit flags win over it)");
  app.add_option("--seed", g_seed, "single seed (shorthand for --seeds)");
  app.add_option("--out", g_out, "output directory");
  app.add_option("--jobs", g_jobs, "worker threads (0 = hardware)");

  // graph
  std::string g_structure;
  std::string g_do;
  std::vector<std::string> g_queries;
  bool g_paths = false, g_dot = false, g_table = false;
  CLI::App* graph_cmd =
      app.add_subcommand("graph", "print a scenario graph or its intervention split; "
                                  "answer d-separation queries");
  graph_cmd->add_option("structure", g_structure, "fig1|fig2|fig3|combined|trial-conditional")
      ->required();
  graph_cmd->add_option("--do", g_do, "interventions, e.g. S=1,Z=z (empty: none)");
  graph_cmd->add_option("--query", g_queries, "d-separation query, e.g. \"Y^{s=1,z} _||_ S | X\"");
  graph_cmd->add_flag("--paths", g_paths, "list open paths even for separated queries");
  graph_cmd->add_flag("--dot", g_dot, "emit graphviz instead of interchange text");
  graph_cmd->add_flag("--table", g_table, "check the structure's claimed-independence rows");

  // simulate
  PipelineFlags sim_flags;
  std::vector<std::string> sim_regimes;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "draw datasets and write CSV files");
  add_pipeline_flags(sim_cmd, sim_flags, /*estimation=*/false);
  sim_cmd->add_option("--regimes", sim_regimes,
                      "obs,do_z0,do_z1,do_s1_z0,do_s1_z1 or all (default obs)")
      ->delimiter(',');

  // estimate
  PipelineFlags est_flags;
  CLI::App* est_cmd =
      app.add_subcommand("estimate", "simulate, estimate, and annotate with exact truths");
  add_pipeline_flags(est_cmd, est_flags, /*estimation=*/true);

  // verify
  std::string v_what = "all";
  VerifyConfig v_cfg;
  std::vector<std::string> v_sets;
  CLI::App* ver_cmd = app.add_subcommand(
      "verify", "run the identification claim matrix; exit 0 iff every row passes");
  ver_cmd->add_option("what", v_what, "all or one scenario name");
  ver_cmd->add_option("--n", v_cfg.n, "rows per estimation dataset (default 1000000)");
  CLI::Option* v_seeds_opt =
      ver_cmd->add_option("--seeds", v_cfg.seeds, "estimation seeds (default 101..105)")
          ->delimiter(',');
  ver_cmd->add_option("--consistency-n", v_cfg.consistency_n,
                      "rows for the consistency sweep (default 10000)");
  ver_cmd->add_option("--replicates", v_cfg.bootstrap_replicates,
                      "bootstrap replicates (default 200)");
  ver_cmd->add_option("--set", v_sets, "override a spec value, name=value (repeatable)");

  // report
  std::vector<std::string> r_inputs;
  CLI::App* rep_cmd =
      app.add_subcommand("report", "combine saved estimate-report JSON into one CSV table");
  rep_cmd->add_option("inputs", r_inputs, "report JSON files or directories")->required();

  for (CLI::App* sub : {graph_cmd, sim_cmd, est_cmd, ver_cmd, rep_cmd}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (graph_cmd->parsed())
      return cmd_graph(g_structure, g_do, g_queries, g_paths, g_dot, g_table);
    if (sim_cmd->parsed() || est_cmd->parsed()) {
      PipelineFlags& f = sim_cmd->parsed() ? sim_flags : est_flags;
      f.config_path = g_config;
      f.seed = g_seed;
      f.out = g_out;
      f.jobs = g_jobs;
      if (sim_cmd->parsed()) return cmd_simulate(merge_config(f), sim_regimes);
      return cmd_estimate(merge_config(f));
    }
    if (ver_cmd->parsed()) {
      v_cfg.overrides = v_sets;
      if (!v_seeds_opt->count() && g_seed) v_cfg.seeds = {*g_seed};
      if (g_jobs) v_cfg.jobs = *g_jobs;
      return cmd_verify(v_what, v_cfg, g_out);
    }
    if (rep_cmd->parsed()) return cmd_report(r_inputs, g_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
