#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "transportlab/scenarios.hpp"

namespace transportlab {

/// Optional third treatment level ("other treatment"). When active, the
/// treatment equation becomes a two-utility multinomial logit: level 1 keeps
/// the scenario's logistic score, level 2 gets `intercept + slope_on_z * z`,
/// and level 0 is the reference. `beta_on_y` is the outcome coefficient of
/// level 2 (level 1 keeps beta_A_on_Y).
struct OtherTreatment {
  double intercept = -1.0;
  double slope_on_z = 0.0;
  double beta_on_y = 0.5;
  bool operator==(const OtherTreatment&) const = default;
};

/// Full simulation fixture: scenario structure plus structural-equation
/// constants. All equations are logistic (or multinomial logit) in the
/// scenario graph's parents with additive effects on the logit scale; the one
/// extra knob is the Z-by-latent interaction in the treatment equation.
struct ScenarioSpec {
  ScenarioId id = ScenarioId::Fig1PerfectAdherence;
  std::vector<double> x_probs;                 // categorical covariate law
  std::map<std::string, double> latent_probs;  // "U" or "U1"/"U2"
  std::map<std::string, double> coeffs;        // one entry per structural edge
  std::map<std::string, double> intercepts;    // "S","Z","Y" and "A" except fig1
  double trial_assign_prob = 0.5;              // P(Z=1 | S=1)
  double zu_interaction = 0.0;                 // Z x latent term in the A equation
  std::optional<OtherTreatment> other_treatment;
  std::uint64_t seed = 1729;

  int x_levels() const { return static_cast<int>(x_probs.size()); }
  int a_levels() const { return other_treatment ? 3 : 2; }
  /// "U" for single-latent scenarios, "U1","U2" otherwise.
  std::vector<std::string> latent_names() const;

  bool operator==(const ScenarioSpec&) const = default;
};

/// Shipped fixture constants for a scenario (tuned so that every bias the
/// verification suite demonstrates exceeds 0.02 at the exact-enumeration
/// level; see docs/claims.md).
ScenarioSpec default_spec(ScenarioId id);

/// Expected coefficient key set: one name per structural edge, rendered
/// beta_<From>_on_<To> for measured sources and gamma_<U*>_on_<To> for
/// unmeasured ones. Two edges carry no coefficient by mechanism: S->Z (the
/// participation switch selects the assignment mechanism) and fig1's
/// deterministic Z->A copy.
std::vector<std::string> expected_coefficient_names(ScenarioId id);

/// Throws InvalidSpec on malformed shape (probability vectors, key sets) and
/// PositivityViolation when an induced conditional probability hits 0 or 1.
void validate_spec(const ScenarioSpec& spec);

/// Applies one "name=value" override. Accepted names: any expected coefficient,
/// alpha_S/alpha_Z/alpha_A/alpha_Y (intercepts), p_U/p_U1/p_U2 (latent
/// probabilities), trial_assign_prob, zu_interaction, seed. Unknown names are
/// errors (InvalidSpec); malformed values are ParseError.
void apply_override(ScenarioSpec& spec, const std::string& assignment);

std::string spec_to_json_text(const ScenarioSpec& spec);
ScenarioSpec spec_from_json_text(const std::string& text);
ScenarioSpec load_spec_file(const std::string& path);
void save_spec_file(const ScenarioSpec& spec, const std::string& path);

/// Validated spec with every conditional probability table precomputed on the
/// full discrete support. Latent combinations are flat-indexed: bit k of u is
/// the value of latent_names()[k].
class CompiledScenario {
 public:
  explicit CompiledScenario(const ScenarioSpec& spec);

  const ScenarioSpec& spec() const { return spec_; }
  int n_x() const { return n_x_; }
  int n_u() const { return n_u_; }  // 2 or 4 latent combinations
  int n_a() const { return n_a_; }  // 2, or 3 with other_treatment

  double p_x(int x) const { return spec_.x_probs[x]; }
  double p_u(int u) const { return u_probs_[u]; }
  double p_s1(int x, int u) const { return s1_[idx_xu(x, u)]; }
  /// Assignment law: the trial randomizer when s=1, logistic otherwise.
  double p_z1(int x, int s, int u) const {
    return s == 1 ? spec_.trial_assign_prob : z1_s0_[idx_xu(x, u)];
  }
  /// Treatment law given the treatment equation's inputs. `s` is the value the
  /// equation sees (relevant only where the graph has an S->A edge).
  double p_a(int x, int s, int z, int u, int a) const {
    return a_[(((x * 2 + s) * 2 + z) * n_u_ + u) * n_a_ + a];
  }
  double p_y1(int x, int a, int u) const { return y1_[(x * n_a_ + a) * n_u_ + u]; }

  /// P(S=1 | X=x) marginalized over latents.
  double p_s1_given_x(int x) const;
  /// P(S=1) in the target population.
  double p_s1_marginal() const;

  bool deterministic_copy_a() const { return copy_a_; }  // fig1: A = Z
  bool a_equation_uses_s() const { return a_uses_s_; }   // S->A edge present

 private:
  int idx_xu(int x, int u) const { return x * n_u_ + u; }

  ScenarioSpec spec_;
  int n_x_ = 0, n_u_ = 0, n_a_ = 2;
  bool copy_a_ = false, a_uses_s_ = false;
  std::vector<double> u_probs_;
  std::vector<double> s1_;     // [x][u]
  std::vector<double> z1_s0_;  // [x][u]
  std::vector<double> a_;      // [x][s][z][u][a]
  std::vector<double> y1_;     // [x][a][u]
};

}  // namespace transportlab
