#include "transportlab/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace transportlab {

std::string_view kind_name(EstimandKind k) {
  switch (k) {
    case EstimandKind::MeanAssign: return "mean_assign";
    case EstimandKind::MeanJoint: return "mean_joint";
    case EstimandKind::ContrastAssign: return "contrast_assign";
    case EstimandKind::ContrastJoint: return "contrast_joint";
  }
  return "mean_joint";
}

std::string_view population_name(Population p) {
  switch (p) {
    case Population::Target: return "target";
    case Population::NonRandomizedSubset: return "subset";
    case Population::TrialPopulation: return "trial";
  }
  return "target";
}

EstimandKind kind_from_name(std::string_view s) {
  if (s == "mean_assign") return EstimandKind::MeanAssign;
  if (s == "mean_joint") return EstimandKind::MeanJoint;
  if (s == "contrast_assign") return EstimandKind::ContrastAssign;
  if (s == "contrast_joint") return EstimandKind::ContrastJoint;
  fail(Err::InvalidEstimand, "unknown estimand kind " + std::string(s));
}

Population population_from_name(std::string_view s) {
  if (s == "target") return Population::Target;
  if (s == "subset" || s == "non_randomized_subset" || s == "s0")
    return Population::NonRandomizedSubset;
  if (s == "trial" || s == "trial_population" || s == "s1") return Population::TrialPopulation;
  fail(Err::InvalidEstimand, "unknown population " + std::string(s));
}

bool is_contrast(EstimandKind k) {
  return k == EstimandKind::ContrastAssign || k == EstimandKind::ContrastJoint;
}

std::string estimand_token(const Estimand& e) {
  std::string t = std::string(population_name(e.population)) + "." + std::string(kind_name(e.kind));
  t += ".z" + std::to_string(e.z);
  if (is_contrast(e.kind)) t += "v" + std::to_string(e.z_alt);
  return t;
}

std::string estimand_display(const Estimand& e) {
  const bool joint = e.kind == EstimandKind::MeanJoint || e.kind == EstimandKind::ContrastJoint;
  const std::string cf = joint ? "Y^(s=1,z)" : "Y^z";
  std::string out;
  if (is_contrast(e.kind)) {
    out = "E[" + cf + "] contrast z=" + std::to_string(e.z) + " vs z=" + std::to_string(e.z_alt);
  } else {
    out = "E[" + cf + "] at z=" + std::to_string(e.z);
  }
  switch (e.population) {
    case Population::Target: out += ", target population"; break;
    case Population::NonRandomizedSubset: out += ", non-randomized subset (S=0)"; break;
    case Population::TrialPopulation: out += ", trial population (S=1)"; break;
  }
  return out;
}

void validate_estimand(const Estimand& e) {
  if (e.z != 0 && e.z != 1)
    fail(Err::InvalidEstimand, "assignment arm must be 0 or 1, got " + std::to_string(e.z));
  if (is_contrast(e.kind)) {
    if (e.z_alt != 0 && e.z_alt != 1)
      fail(Err::InvalidEstimand, "contrast arm must be 0 or 1, got " + std::to_string(e.z_alt));
    if (e.z == e.z_alt) fail(Err::InvalidEstimand, "contrast arms must differ");
  }
}

namespace {

// E[Y | x, u, A drawn with the treatment equation seeing s_in_a, Z := z].
double ey_given(const CompiledScenario& cs, int x, int s_in_a, int z, int u) {
  double ey = 0.0;
  for (int a = 0; a < cs.n_a(); ++a) ey += cs.p_a(x, s_in_a, z, u, a) * cs.p_y1(x, a, u);
  return ey;
}

double oracle_mean(const CompiledScenario& cs, EstimandKind kind, Population pop, int z) {
  const bool joint = kind == EstimandKind::MeanJoint;
  double num = 0.0, den = 0.0;
  for (int x = 0; x < cs.n_x(); ++x)
    for (int u = 0; u < cs.n_u(); ++u) {
      const double w = cs.p_x(x) * cs.p_u(u);
      const double ps1 = cs.p_s1(x, u);
      double ey;
      switch (pop) {
        case Population::Target:
          // Assignment-only intervention leaves participation natural: the
          // treatment equation sees the unit's own S.
          ey = joint ? ey_given(cs, x, 1, z, u)
                     : ps1 * ey_given(cs, x, 1, z, u) + (1 - ps1) * ey_given(cs, x, 0, z, u);
          num += w * ey;
          den += w;
          break;
        case Population::TrialPopulation:
          // Conditional on S=1 both counterfactuals see s=1 in the equation.
          ey = ey_given(cs, x, 1, z, u);
          num += w * ps1 * ey;
          den += w * ps1;
          break;
        case Population::NonRandomizedSubset:
          ey = joint ? ey_given(cs, x, 1, z, u) : ey_given(cs, x, 0, z, u);
          num += w * (1 - ps1) * ey;
          den += w * (1 - ps1);
          break;
      }
    }
  return num / den;
}

// Enumerated E[Y | X=x, S=1, Z=z] in the observational regime. The in-trial
// assignment is exogenous, so it drops out of the latent posterior.
double ey_obs_trial(const CompiledScenario& cs, int x, int z) {
  double num = 0.0, den = 0.0;
  for (int u = 0; u < cs.n_u(); ++u) {
    const double w = cs.p_u(u) * cs.p_s1(x, u);
    num += w * ey_given(cs, x, 1, z, u);
    den += w;
  }
  return num / den;
}

double functional_mean(const CompiledScenario& cs, Population pop, int z) {
  double num = 0.0, den = 0.0;
  for (int x = 0; x < cs.n_x(); ++x) {
    const double ps1 = cs.p_s1_given_x(x);
    const double ey = ey_obs_trial(cs, x, z);
    switch (pop) {
      case Population::Target:
        num += cs.p_x(x) * ey;
        den += cs.p_x(x);
        break;
      case Population::NonRandomizedSubset:
        num += cs.p_x(x) * (1 - ps1) * ey;
        den += cs.p_x(x) * (1 - ps1);
        break;
      case Population::TrialPopulation:
        num += cs.p_x(x) * ps1 * ey;
        den += cs.p_x(x) * ps1;
        break;
    }
  }
  return num / den;
}

}  // namespace

double oracle_truth(const ScenarioSpec& spec, const Estimand& e) {
  validate_estimand(e);
  const CompiledScenario cs(spec);
  switch (e.kind) {
    case EstimandKind::MeanAssign:
    case EstimandKind::MeanJoint:
      return oracle_mean(cs, e.kind, e.population, e.z);
    case EstimandKind::ContrastAssign:
      return oracle_mean(cs, EstimandKind::MeanAssign, e.population, e.z) -
             oracle_mean(cs, EstimandKind::MeanAssign, e.population, e.z_alt);
    case EstimandKind::ContrastJoint:
      return oracle_mean(cs, EstimandKind::MeanJoint, e.population, e.z) -
             oracle_mean(cs, EstimandKind::MeanJoint, e.population, e.z_alt);
  }
  fail(Err::InvalidEstimand, "unreachable estimand kind");
}

double functional_truth(const ScenarioSpec& spec, const Estimand& e) {
  validate_estimand(e);
  const CompiledScenario cs(spec);
  if (is_contrast(e.kind))
    return functional_mean(cs, e.population, e.z) - functional_mean(cs, e.population, e.z_alt);
  return functional_mean(cs, e.population, e.z);
}

bool estimand_identified(const ScenarioSpec& spec, const Estimand& e) {
  validate_estimand(e);
  if (e.population == Population::TrialPopulation) return true;
  const auto active = [&](const char* name) {
    auto it = spec.coeffs.find(name);
    return it != spec.coeffs.end() && it->second != 0.0;
  };
  // The participation latent reaches treatment through its main coefficient
  // and through the assignment interaction; the interaction term only binds
  // in arms that set z=1, so the fork is judged per arm.
  const bool inter_on_u1 =
      spec.zu_interaction != 0.0 && spec.latent_probs.count("U1") != 0;
  const auto fork_open = [&](int z) {
    const bool u1_to_a = active("gamma_U1_on_A") || (inter_on_u1 && z == 1);
    return active("gamma_U1_on_S") && u1_to_a;
  };
  const bool joint_ok = is_contrast(e.kind)
                            ? !fork_open(e.z) && !fork_open(e.z_alt)
                            : !fork_open(e.z);
  if (e.kind == EstimandKind::MeanJoint || e.kind == EstimandKind::ContrastJoint)
    return joint_ok;
  // Assignment-only estimands additionally need the counterfactuals to agree:
  // no active participation-to-treatment-to-outcome path.
  const bool sa_path = active("beta_S_on_A") && active("beta_A_on_Y");
  return joint_ok && !sa_path;
}

JointTable::JointTable(std::vector<std::string> names, std::vector<int> cards)
    : names_(std::move(names)), cards_(std::move(cards)) {
  if (names_.size() != cards_.size()) fail(Err::InvalidQuery, "names/cards size mismatch");
  strides_.assign(names_.size(), 1);
  for (int i = static_cast<int>(names_.size()) - 2; i >= 0; --i)
    strides_[i] = strides_[i + 1] * cards_[i + 1];
  probs_.assign(names_.empty() ? 1 : strides_[0] * cards_[0], 0.0);
}

double& JointTable::at(const std::vector<int>& assignment) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < assignment.size(); ++i) idx += assignment[i] * strides_[i];
  return probs_[idx];
}

double JointTable::total() const {
  double t = 0.0;
  for (double p : probs_) t += p;
  return t;
}

int JointTable::var_index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  fail(Err::UnknownNode, "no variable named " + name + " in the enumerated joint");
}

double JointTable::cmi(const std::vector<std::string>& set_a, const std::vector<std::string>& set_b,
                       const std::vector<std::string>& conditioning) const {
  std::vector<int> ia, ib, ic;
  for (const auto& n : set_a) ia.push_back(var_index(n));
  for (const auto& n : set_b) ib.push_back(var_index(n));
  for (const auto& n : conditioning) ic.push_back(var_index(n));

  const auto group_size = [&](const std::vector<int>& g) {
    std::size_t s = 1;
    for (int i : g) s *= cards_[i];
    return s;
  };
  const std::size_t na = group_size(ia), nb = group_size(ib), nc = group_size(ic);
  std::vector<double> p_abc(na * nb * nc, 0.0), p_ac(na * nc, 0.0), p_bc(nb * nc, 0.0),
      p_c(nc, 0.0);

  std::vector<int> v(names_.size(), 0);
  for (std::size_t cell = 0; cell < probs_.size(); ++cell) {
    const double p = probs_[cell];
    if (p > 0.0) {
      std::size_t rest = cell;
      for (std::size_t i = 0; i < names_.size(); ++i) {
        v[i] = static_cast<int>(rest / strides_[i]);
        rest %= strides_[i];
      }
      const auto key = [&](const std::vector<int>& g) {
        std::size_t k = 0;
        for (int i : g) k = k * cards_[i] + v[i];
        return k;
      };
      const std::size_t ka = key(ia), kb = key(ib), kc = key(ic);
      p_abc[(ka * nb + kb) * nc + kc] += p;
      p_ac[ka * nc + kc] += p;
      p_bc[kb * nc + kc] += p;
      p_c[kc] += p;
    }
  }

  double info = 0.0;
  for (std::size_t ka = 0; ka < na; ++ka)
    for (std::size_t kb = 0; kb < nb; ++kb)
      for (std::size_t kc = 0; kc < nc; ++kc) {
        const double p = p_abc[(ka * nb + kb) * nc + kc];
        if (p <= 0.0) continue;
        info += p * std::log(p * p_c[kc] / (p_ac[ka * nc + kc] * p_bc[kb * nc + kc]));
      }
  return std::max(0.0, info);
}

JointTable JointTable::condition(const std::string& name, int value) const {
  const int drop = var_index(name);
  std::vector<std::string> names;
  std::vector<int> cards;
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (static_cast<int>(i) != drop) {
      names.push_back(names_[i]);
      cards.push_back(cards_[i]);
    }
  JointTable out(std::move(names), std::move(cards));
  std::vector<int> v(names_.size(), 0), w(names_.size() - 1, 0);
  double mass = 0.0;
  for (std::size_t cell = 0; cell < probs_.size(); ++cell) {
    std::size_t rest = cell;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      v[i] = static_cast<int>(rest / strides_[i]);
      rest %= strides_[i];
    }
    if (v[drop] != value) continue;
    std::size_t k = 0;
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (static_cast<int>(i) != drop) w[k++] = v[i];
    out.at(w) += probs_[cell];
    mass += probs_[cell];
  }
  if (mass <= 0.0) fail(Err::InvalidQuery, "conditioning event " + name + "=" +
                                               std::to_string(value) + " has probability 0");
  for (double& p : out.probs_) p /= mass;
  return out;
}

JointTable enumerate_joint(const ScenarioSpec& spec, GraphVariant v, int z_value) {
  if (z_value != 0 && z_value != 1)
    fail(Err::InvalidQuery, "z_value must be 0 or 1, got " + std::to_string(z_value));
  const CompiledScenario cs(spec);
  const auto latents = spec.latent_names();

  // Variable names match the variant graph's random nodes.
  std::string z_name = "Z", a_name = "A", y_name = "Y";
  if (v == GraphVariant::AssignSwig) {
    a_name = "A^z";
    y_name = "Y^z";
  } else if (v == GraphVariant::JointSwig) {
    z_name = "Z^{s=1}";
    a_name = "A^{s=1,z}";
    y_name = "Y^{s=1,z}";
  }

  std::vector<std::string> names{"X"};
  std::vector<int> cards{cs.n_x()};
  for (const auto& nm : latents) {
    names.push_back(nm);
    cards.push_back(2);
  }
  names.insert(names.end(), {"S", z_name, a_name, y_name});
  cards.insert(cards.end(), {2, 2, cs.n_a(), 2});

  JointTable table(std::move(names), std::move(cards));
  const int n_lat = static_cast<int>(latents.size());
  std::vector<int> asg(5 + n_lat, 0);

  for (int x = 0; x < cs.n_x(); ++x)
    for (int u = 0; u < cs.n_u(); ++u)
      for (int s = 0; s < 2; ++s)
        for (int z = 0; z < 2; ++z)
          for (int a = 0; a < cs.n_a(); ++a)
            for (int y = 0; y < 2; ++y) {
              const double ps1 = cs.p_s1(x, u);
              double pz1, pa, py1;
              switch (v) {
                case GraphVariant::Dag:
                  pz1 = cs.p_z1(x, s, u);
                  pa = cs.p_a(x, s, z, u, a);
                  break;
                case GraphVariant::AssignSwig:
                  pz1 = cs.p_z1(x, s, u);           // natural assignment
                  pa = cs.p_a(x, s, z_value, u, a);  // treatment under the fixed arm
                  break;
                case GraphVariant::JointSwig:
                  pz1 = spec.trial_assign_prob;      // randomized under scale-up
                  pa = cs.p_a(x, 1, z_value, u, a);
                  break;
              }
              py1 = cs.p_y1(x, a, u);
              const double p = cs.p_x(x) * cs.p_u(u) * (s ? ps1 : 1 - ps1) *
                               (z ? pz1 : 1 - pz1) * pa * (y ? py1 : 1 - py1);
              asg[0] = x;
              for (int k = 0; k < n_lat; ++k) asg[1 + k] = (u >> k) & 1;
              asg[1 + n_lat] = s;
              asg[2 + n_lat] = z;
              asg[3 + n_lat] = a;
              asg[4 + n_lat] = y;
              table.at(asg) += p;
            }
  return table;
}

double claim_cmi(const ScenarioSpec& spec, const IndependenceClaim& claim, int z_value) {
  JointTable table = enumerate_joint(spec, claim.variant, z_value);
  std::vector<std::string> cond = claim.query.conditioning;
  if (claim.structure == StructureId::TrialConditional) {
    table = table.condition("S", 1);
    cond.erase(std::remove(cond.begin(), cond.end(), "S"), cond.end());
  }
  return table.cmi(claim.query.set_a, claim.query.set_b, cond);
}

std::vector<MarkovCheck> local_markov_cmis(const ScenarioSpec& spec, GraphVariant v,
                                           int z_value) {
  const CausalGraph g = variant_graph(structure_of(spec.id), v);
  const JointTable table = enumerate_joint(spec, v, z_value);
  const int n = static_cast<int>(g.nodes().size());

  // Descendant closure over all nodes (fixed halves traversed: a random node
  // downstream via a fixed half is still a causal descendant).
  std::vector<std::vector<bool>> desc(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) desc[i][i] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [from, to] : g.edges())
      for (int t = 0; t < n; ++t)
        if (desc[to][t] && !desc[from][t]) {
          desc[from][t] = true;
          changed = true;
        }
  }

  const auto is_random = [&](int i) {
    return g.nodes()[i].kind != NodeKind::FixedIntervention;
  };

  std::vector<MarkovCheck> out;
  for (int i = 0; i < n; ++i) {
    if (!is_random(i)) continue;
    MarkovCheck chk;
    chk.node = g.nodes()[i].name();
    for (int p : g.parents(i))
      if (is_random(p)) chk.parents.push_back(g.nodes()[p].name());
    for (int j = 0; j < n; ++j) {
      if (j == i || !is_random(j) || desc[i][j]) continue;
      const std::string nm = g.nodes()[j].name();
      if (std::find(chk.parents.begin(), chk.parents.end(), nm) != chk.parents.end()) continue;
      chk.nondescendants.push_back(nm);
    }
    if (chk.nondescendants.empty()) continue;
    chk.cmi = table.cmi({chk.node}, chk.nondescendants, chk.parents);
    out.push_back(std::move(chk));
  }
  return out;
}

}  // namespace transportlab
