#include "transportlab/spec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace transportlab {

namespace {

using ordered_json = nlohmann::ordered_json;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

bool single_latent(ScenarioId id) {
  return id == ScenarioId::Fig1PerfectAdherence || id == ScenarioId::Fig2DirectEffect;
}

std::string coeff_name(const std::string& from, const std::string& to) {
  const bool unmeasured = !from.empty() && from[0] == 'U';
  return (unmeasured ? "gamma_" : "beta_") + from + "_on_" + to;
}

}  // namespace

std::vector<std::string> ScenarioSpec::latent_names() const {
  if (single_latent(id)) return {"U"};
  return {"U1", "U2"};
}

std::vector<std::string> expected_coefficient_names(ScenarioId id) {
  CausalGraph g = scenario_graph(structure_of(id));
  std::vector<std::string> names;
  for (const auto& [from, to] : g.edges()) {
    const std::string& f = g.nodes()[from].base;
    const std::string& t = g.nodes()[to].base;
    if (f == "S" && t == "Z") continue;        // mechanism switch, no additive term
    if (g.copy_source(t).has_value()) continue;  // deterministic copy edge
    names.push_back(coeff_name(f, t));
  }
  std::sort(names.begin(), names.end());
  return names;
}

ScenarioSpec default_spec(ScenarioId id) {
  ScenarioSpec sp;
  sp.id = id;
  sp.x_probs = {0.35, 0.30, 0.20, 0.15};
  sp.trial_assign_prob = 0.5;
  sp.seed = 1729;
  switch (id) {
    case ScenarioId::Fig1PerfectAdherence:
      sp.latent_probs = {{"U", 0.5}};
      sp.coeffs = {{"beta_X_on_S", 0.55}, {"beta_X_on_Z", 0.35}, {"beta_X_on_Y", 0.5},
                   {"beta_A_on_Y", 1.1},  {"gamma_U_on_Z", 1.1}, {"gamma_U_on_Y", 1.3}};
      sp.intercepts = {{"S", -1.25}, {"Z", -0.4}, {"Y", -1.5}};
      sp.zu_interaction = 0.0;
      break;
    case ScenarioId::Fig2DirectEffect:
      sp.latent_probs = {{"U", 0.5}};
      sp.coeffs = {{"beta_X_on_S", 0.5},  {"beta_X_on_Z", 0.3},  {"beta_X_on_A", 0.25},
                   {"beta_X_on_Y", 0.4},  {"beta_S_on_A", 1.5},  {"beta_Z_on_A", 1.3},
                   {"beta_A_on_Y", 1.5},  {"gamma_U_on_Z", 1.0}, {"gamma_U_on_A", 0.9},
                   {"gamma_U_on_Y", 1.1}};
      sp.intercepts = {{"S", -1.1}, {"Z", -0.3}, {"A", -1.5}, {"Y", -1.7}};
      sp.zu_interaction = 0.7;
      break;
    case ScenarioId::Fig3CommonCauses:
      sp.latent_probs = {{"U1", 0.45}, {"U2", 0.5}};
      sp.coeffs = {{"beta_X_on_S", 0.5},   {"beta_X_on_Z", 0.3},   {"beta_X_on_A", 0.2},
                   {"beta_X_on_Y", 0.4},   {"beta_Z_on_A", 1.5},   {"beta_A_on_Y", 1.7},
                   {"gamma_U1_on_S", 2.0}, {"gamma_U1_on_A", 2.8}, {"gamma_U2_on_Z", 1.0},
                   {"gamma_U2_on_A", 0.7}, {"gamma_U2_on_Y", 1.1}};
      sp.intercepts = {{"S", -1.8}, {"Z", -0.3}, {"A", -2.2}, {"Y", -1.7}};
      sp.zu_interaction = -1.2;
      break;
    case ScenarioId::CombinedAppendix:
      sp.latent_probs = {{"U1", 0.45}, {"U2", 0.5}};
      sp.coeffs = {{"beta_X_on_S", 0.5},   {"beta_X_on_Z", 0.3},   {"beta_X_on_A", 0.2},
                   {"beta_X_on_Y", 0.4},   {"beta_S_on_A", 0.8},   {"beta_Z_on_A", 1.5},
                   {"beta_A_on_Y", 1.7},   {"gamma_U1_on_S", 2.0}, {"gamma_U1_on_A", 2.8},
                   {"gamma_U2_on_Z", 1.0}, {"gamma_U2_on_A", 0.7}, {"gamma_U2_on_Y", 1.1}};
      sp.intercepts = {{"S", -1.8}, {"Z", -0.3}, {"A", -2.4}, {"Y", -1.7}};
      sp.zu_interaction = -1.4;
      break;
  }
  return sp;
}

namespace {

void check_prob_open(double p, const std::string& what) {
  if (!(p > 0.0) || !(p < 1.0) || !std::isfinite(p))
    fail(Err::InvalidSpec, what + " must lie strictly inside (0,1), got " + std::to_string(p));
}

std::vector<std::string> expected_intercept_keys(ScenarioId id) {
  if (id == ScenarioId::Fig1PerfectAdherence) return {"S", "Y", "Z"};
  return {"A", "S", "Y", "Z"};
}

template <typename Map>
std::vector<std::string> keys_of(const Map& m) {
  std::vector<std::string> ks;
  for (const auto& [k, v] : m) ks.push_back(k);
  return ks;
}

void check_key_set(const std::vector<std::string>& got, std::vector<std::string> want,
                   const std::string& what) {
  std::sort(want.begin(), want.end());
  std::vector<std::string> missing, extra;
  std::set_difference(want.begin(), want.end(), got.begin(), got.end(),
                      std::back_inserter(missing));
  std::set_difference(got.begin(), got.end(), want.begin(), want.end(),
                      std::back_inserter(extra));
  if (missing.empty() && extra.empty()) return;
  std::string msg = what + " keys do not match the scenario graph;";
  for (const auto& k : missing) msg += " missing " + k;
  for (const auto& k : extra) msg += " unexpected " + k;
  fail(Err::InvalidSpec, msg);
}

}  // namespace

void validate_spec(const ScenarioSpec& spec) {
  if (spec.x_levels() < 2) fail(Err::InvalidSpec, "x_probs needs at least 2 levels");
  double sum = 0.0;
  for (double p : spec.x_probs) {
    check_prob_open(p, "x_probs entry");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    fail(Err::InvalidSpec, "x_probs must sum to 1 within 1e-12, got " + std::to_string(sum));

  const auto latents = spec.latent_names();
  check_key_set(keys_of(spec.latent_probs),
                std::vector<std::string>(latents.begin(), latents.end()), "latent_probs");
  for (const auto& [k, p] : spec.latent_probs) check_prob_open(p, "latent_probs[" + k + "]");

  check_key_set(keys_of(spec.coeffs), expected_coefficient_names(spec.id), "coefficient");
  check_key_set(keys_of(spec.intercepts), expected_intercept_keys(spec.id), "intercept");
  for (const auto& [k, v] : spec.coeffs)
    if (!std::isfinite(v)) fail(Err::InvalidSpec, "coefficient " + k + " is not finite");
  for (const auto& [k, v] : spec.intercepts)
    if (!std::isfinite(v)) fail(Err::InvalidSpec, "intercept " + k + " is not finite");
  if (!std::isfinite(spec.zu_interaction))
    fail(Err::InvalidSpec, "zu_interaction is not finite");

  if (spec.other_treatment && spec.id == ScenarioId::Fig1PerfectAdherence)
    fail(Err::InvalidSpec, "other_treatment is incompatible with the deterministic-copy scenario");

  if (!(spec.trial_assign_prob > 0.0) || !(spec.trial_assign_prob < 1.0))
    fail(Err::PositivityViolation,
         "trial_assign_prob must lie in (0,1): both assignment arms need positive probability");

  // Induced positivity lives in the compiled tables, where saturation (an
  // exact 0/1 cell) becomes visible; constructing performs those checks.
  CompiledScenario compiled(spec);
  (void)compiled;
}

CompiledScenario::CompiledScenario(const ScenarioSpec& spec) : spec_(spec) {
  // Shape checks first (cheap, throw before any table work). Guard against
  // infinite recursion: validate_spec constructs a CompiledScenario, so the
  // shape checks are duplicated here rather than calling validate_spec.
  if (spec_.x_levels() < 2) fail(Err::InvalidSpec, "x_probs needs at least 2 levels");
  double sum = 0.0;
  for (double p : spec_.x_probs) {
    check_prob_open(p, "x_probs entry");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    fail(Err::InvalidSpec, "x_probs must sum to 1 within 1e-12, got " + std::to_string(sum));
  const auto latents = spec_.latent_names();
  check_key_set(keys_of(spec_.latent_probs),
                std::vector<std::string>(latents.begin(), latents.end()), "latent_probs");
  for (const auto& [k, p] : spec_.latent_probs) check_prob_open(p, "latent_probs[" + k + "]");
  check_key_set(keys_of(spec_.coeffs), expected_coefficient_names(spec_.id), "coefficient");
  check_key_set(keys_of(spec_.intercepts), expected_intercept_keys(spec_.id), "intercept");
  if (spec_.other_treatment && spec_.id == ScenarioId::Fig1PerfectAdherence)
    fail(Err::InvalidSpec, "other_treatment is incompatible with the deterministic-copy scenario");
  if (!(spec_.trial_assign_prob > 0.0) || !(spec_.trial_assign_prob < 1.0))
    fail(Err::PositivityViolation,
         "trial_assign_prob must lie in (0,1): both assignment arms need positive probability");

  n_x_ = spec_.x_levels();
  const int n_lat = static_cast<int>(latents.size());
  n_u_ = 1 << n_lat;
  n_a_ = spec_.a_levels();
  copy_a_ = spec_.id == ScenarioId::Fig1PerfectAdherence;
  a_uses_s_ = spec_.coeffs.count("beta_S_on_A") > 0;

  u_probs_.assign(n_u_, 1.0);
  for (int u = 0; u < n_u_; ++u)
    for (int k = 0; k < n_lat; ++k) {
      const double p = spec_.latent_probs.at(latents[k]);
      u_probs_[u] *= (u >> k) & 1 ? p : 1.0 - p;
    }

  const auto c = [&](const char* name) {
    auto it = spec_.coeffs.find(name);
    return it == spec_.coeffs.end() ? 0.0 : it->second;
  };
  const auto u_bit = [&](int u, const char* name) -> double {
    for (int k = 0; k < n_lat; ++k)
      if (latents[k] == name) return (u >> k) & 1;
    return 0.0;
  };

  s1_.resize(n_x_ * n_u_);
  z1_s0_.resize(n_x_ * n_u_);
  a_.resize(n_x_ * 2 * 2 * n_u_ * n_a_);
  y1_.resize(n_x_ * n_a_ * n_u_);
  const bool two_latents = n_lat == 2;

  for (int x = 0; x < n_x_; ++x)
    for (int u = 0; u < n_u_; ++u) {
      double ts = spec_.intercepts.at("S") + c("beta_X_on_S") * x;
      if (two_latents) ts += c("gamma_U1_on_S") * u_bit(u, "U1");
      s1_[idx_xu(x, u)] = sigmoid(ts);

      double tz = spec_.intercepts.at("Z") + c("beta_X_on_Z") * x;
      tz += two_latents ? c("gamma_U2_on_Z") * u_bit(u, "U2") : c("gamma_U_on_Z") * u_bit(u, "U");
      z1_s0_[idx_xu(x, u)] = sigmoid(tz);

      for (int s = 0; s < 2; ++s)
        for (int z = 0; z < 2; ++z) {
          double* cell = &a_[(((x * 2 + s) * 2 + z) * n_u_ + u) * n_a_];
          if (copy_a_) {
            for (int a = 0; a < n_a_; ++a) cell[a] = a == z ? 1.0 : 0.0;
          } else {
            double ta = spec_.intercepts.at("A") + c("beta_X_on_A") * x + c("beta_Z_on_A") * z;
            if (a_uses_s_) ta += c("beta_S_on_A") * s;
            if (two_latents) {
              ta += c("gamma_U1_on_A") * u_bit(u, "U1") + c("gamma_U2_on_A") * u_bit(u, "U2");
              ta += spec_.zu_interaction * z * u_bit(u, "U1");
            } else {
              ta += c("gamma_U_on_A") * u_bit(u, "U");
              ta += spec_.zu_interaction * z * u_bit(u, "U");
            }
            if (n_a_ == 2) {
              const double p1 = sigmoid(ta);
              cell[0] = 1.0 - p1;
              cell[1] = p1;
            } else {
              const auto& ot = *spec_.other_treatment;
              const double e1 = std::exp(ta);
              const double e2 = std::exp(ot.intercept + ot.slope_on_z * z);
              const double den = 1.0 + e1 + e2;
              cell[0] = 1.0 / den;
              cell[1] = e1 / den;
              cell[2] = e2 / den;
            }
          }
        }

      for (int a = 0; a < n_a_; ++a) {
        double ty = spec_.intercepts.at("Y") + c("beta_X_on_Y") * x;
        if (a == 1) ty += c("beta_A_on_Y");
        if (a == 2) ty += spec_.other_treatment->beta_on_y;
        ty += two_latents ? c("gamma_U2_on_Y") * u_bit(u, "U2") : c("gamma_U_on_Y") * u_bit(u, "U");
        y1_[(x * n_a_ + a) * n_u_ + u] = sigmoid(ty);
      }
    }

  // Positivity over the induced tables: saturation to an exact 0 or 1 is a
  // spec error (huge coefficients), not a sampling-time surprise.
  for (int x = 0; x < n_x_; ++x) {
    const double ps = p_s1_given_x(x);
    if (!(ps > 0.0) || !(ps < 1.0))
      fail(Err::PositivityViolation,
           "P(S=1 | X=" + std::to_string(x) + ") = " + std::to_string(ps) +
               " leaves one participation arm empty");
    for (int u = 0; u < n_u_; ++u) {
      if (!(s1_[idx_xu(x, u)] > 0.0) || !(s1_[idx_xu(x, u)] < 1.0))
        fail(Err::PositivityViolation, "participation probability saturated at X=" +
                                           std::to_string(x) + ", latent combination " +
                                           std::to_string(u));
      if (!(z1_s0_[idx_xu(x, u)] > 0.0) || !(z1_s0_[idx_xu(x, u)] < 1.0))
        fail(Err::PositivityViolation, "non-participant assignment probability saturated at X=" +
                                           std::to_string(x) + ", latent combination " +
                                           std::to_string(u));
    }
  }
}

double CompiledScenario::p_s1_given_x(int x) const {
  double num = 0.0;
  for (int u = 0; u < n_u_; ++u) num += u_probs_[u] * s1_[idx_xu(x, u)];
  return num;
}

double CompiledScenario::p_s1_marginal() const {
  double num = 0.0;
  for (int x = 0; x < n_x_; ++x) num += spec_.x_probs[x] * p_s1_given_x(x);
  return num;
}

void apply_override(ScenarioSpec& spec, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(Err::ParseError, "override must look like name=value: " + assignment);
  const std::string name = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  double num = 0.0;
  try {
    std::size_t used = 0;
    num = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    fail(Err::ParseError, "override value is not a number: " + assignment);
  }

  if (name == "trial_assign_prob") {
    spec.trial_assign_prob = num;
    return;
  }
  if (name == "zu_interaction") {
    spec.zu_interaction = num;
    return;
  }
  if (name == "seed") {
    spec.seed = static_cast<std::uint64_t>(num);
    return;
  }
  if (name.rfind("alpha_", 0) == 0) {
    const std::string node = name.substr(6);
    if (spec.intercepts.count(node)) {
      spec.intercepts[node] = num;
      return;
    }
    fail(Err::InvalidSpec, "no intercept named " + name + " in this scenario");
  }
  if (name.rfind("p_", 0) == 0) {
    const std::string latent = name.substr(2);
    if (spec.latent_probs.count(latent)) {
      spec.latent_probs[latent] = num;
      return;
    }
    fail(Err::InvalidSpec, "no latent named " + latent + " in this scenario");
  }
  if (spec.coeffs.count(name)) {
    spec.coeffs[name] = num;
    return;
  }
  fail(Err::InvalidSpec, "unknown override name " + name + " for scenario " +
                             std::string(scenario_name(spec.id)));
}

std::string spec_to_json_text(const ScenarioSpec& spec) {
  ordered_json j;
  j["scenario"] = std::string(scenario_name(spec.id));
  j["x_levels"] = spec.x_levels();
  j["x_probs"] = spec.x_probs;
  j["latent_probs"] = ordered_json::object();
  for (const auto& [k, v] : spec.latent_probs) j["latent_probs"][k] = v;
  j["coefficients"] = ordered_json::object();
  for (const auto& [k, v] : spec.coeffs) j["coefficients"][k] = v;
  j["intercepts"] = ordered_json::object();
  for (const auto& [k, v] : spec.intercepts) j["intercepts"][k] = v;
  j["trial_assign_prob"] = spec.trial_assign_prob;
  j["zu_interaction"] = spec.zu_interaction;
  if (spec.other_treatment) {
    j["other_treatment"] = {{"intercept", spec.other_treatment->intercept},
                            {"slope_on_z", spec.other_treatment->slope_on_z},
                            {"beta_on_y", spec.other_treatment->beta_on_y}};
  }
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

ScenarioSpec spec_from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    fail(Err::ParseError, std::string("bad spec JSON: ") + e.what());
  }
  ScenarioSpec sp;
  try {
    sp.id = scenario_from_name(j.at("scenario").get<std::string>());
    sp = default_spec(sp.id);  // unspecified keys keep fixture values
    if (j.contains("x_probs")) sp.x_probs = j["x_probs"].get<std::vector<double>>();
    if (j.contains("x_levels") &&
        j["x_levels"].get<int>() != static_cast<int>(sp.x_probs.size()))
      fail(Err::InvalidSpec, "x_levels disagrees with x_probs length");
    if (j.contains("latent_probs"))
      for (const auto& [k, v] : j["latent_probs"].items())
        sp.latent_probs[k] = v.get<double>();
    if (j.contains("coefficients")) {
      sp.coeffs.clear();
      for (const auto& [k, v] : j["coefficients"].items()) sp.coeffs[k] = v.get<double>();
    }
    if (j.contains("intercepts")) {
      sp.intercepts.clear();
      for (const auto& [k, v] : j["intercepts"].items()) sp.intercepts[k] = v.get<double>();
    }
    if (j.contains("trial_assign_prob")) sp.trial_assign_prob = j["trial_assign_prob"].get<double>();
    if (j.contains("zu_interaction")) sp.zu_interaction = j["zu_interaction"].get<double>();
    if (j.contains("other_treatment") && !j["other_treatment"].is_null()) {
      OtherTreatment ot;
      const auto& o = j["other_treatment"];
      if (o.contains("intercept")) ot.intercept = o["intercept"].get<double>();
      if (o.contains("slope_on_z")) ot.slope_on_z = o["slope_on_z"].get<double>();
      if (o.contains("beta_on_y")) ot.beta_on_y = o["beta_on_y"].get<double>();
      sp.other_treatment = ot;
    }
    if (j.contains("seed")) sp.seed = j["seed"].get<std::uint64_t>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(Err::ParseError, std::string("bad spec JSON: ") + e.what());
  }
  validate_spec(sp);
  return sp;
}

ScenarioSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::IoError, "cannot open spec file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return spec_from_json_text(ss.str());
}

void save_spec_file(const ScenarioSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::IoError, "cannot write spec file " + path);
  out << spec_to_json_text(spec);
}

}  // namespace transportlab
