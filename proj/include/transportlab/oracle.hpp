#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "transportlab/spec.hpp"

namespace transportlab {

enum class EstimandKind { MeanAssign, MeanJoint, ContrastAssign, ContrastJoint };
enum class Population { Target, NonRandomizedSubset, TrialPopulation };

/// A counterfactual mean or contrast in one of the three populations.
/// Means use `z`; contrasts are value(z) - value(z_alt).
struct Estimand {
  EstimandKind kind = EstimandKind::MeanJoint;
  Population population = Population::Target;
  int z = 1;
  int z_alt = 0;

  bool operator==(const Estimand&) const = default;
};

std::string_view kind_name(EstimandKind k);        // "mean_joint", "contrast_assign", ...
std::string_view population_name(Population p);    // "target", "subset", "trial"
EstimandKind kind_from_name(std::string_view s);
Population population_from_name(std::string_view s);
bool is_contrast(EstimandKind k);

/// "target.mean_joint.z1", "trial.contrast_assign.z1v0" — stable id fragment.
std::string estimand_token(const Estimand& e);
/// Human form, e.g. "E[Y^(s=1,z)] at z=1, target population".
std::string estimand_display(const Estimand& e);

/// Throws InvalidEstimand: z outside {0,1}; contrast with z == z_alt.
void validate_estimand(const Estimand& e);

/// Exact counterfactual value by full-support enumeration of the mutilated
/// model; subset/trial populations condition on the observational
/// participation law. No Monte Carlo error.
double oracle_truth(const ScenarioSpec& spec, const Estimand& e);

/// Exact asymptotic value of the plug-in identification functional for the
/// estimand's population: standardizes the enumerated E[Y | X, S=1, Z=z] over
/// the population's covariate law. Coincides with oracle_truth exactly when
/// the estimand is identified under the scenario's active edges.
double functional_truth(const ScenarioSpec& spec, const Estimand& e);

/// Claimed identification status under the scenario's ACTIVE edge set (zeroed
/// coefficients count as absent): trial-population estimands always; others
/// need the unmeasured participation-treatment fork inactive, and
/// assignment-only estimands additionally need the participation-to-treatment
/// path broken.
bool estimand_identified(const ScenarioSpec& spec, const Estimand& e);

/// Exact joint distribution over a graph variant's random nodes (fixed halves
/// are constants and carry no variable). Variable names match the variant
/// graph's node names.
class JointTable {
 public:
  JointTable(std::vector<std::string> names, std::vector<int> cards);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& probs() const { return probs_; }
  double& at(const std::vector<int>& assignment);
  double total() const;

  /// Conditional mutual information I(A; B | C) in nats over the table.
  double cmi(const std::vector<std::string>& set_a, const std::vector<std::string>& set_b,
             const std::vector<std::string>& conditioning) const;

  /// Table restricted to name == value, variable removed, renormalized.
  JointTable condition(const std::string& name, int value) const;

 private:
  int var_index(const std::string& name) const;

  std::vector<std::string> names_;
  std::vector<int> cards_;
  std::vector<int> strides_;
  std::vector<double> probs_;
};

/// Enumerates the exact joint law of the variant's random nodes; interventions
/// use the numeric arm `z_value`.
JointTable enumerate_joint(const ScenarioSpec& spec, GraphVariant v, int z_value = 1);

/// CMI for one claimed-independence row, using the enumerated joint of the
/// matching variant. Trial-conditional rows are context-specific: evaluated
/// inside the S=1 slice with S dropped from the conditioning set.
double claim_cmi(const ScenarioSpec& spec, const IndependenceClaim& claim, int z_value = 1);

struct MarkovCheck {
  std::string node;
  std::vector<std::string> parents;
  std::vector<std::string> nondescendants;
  double cmi = 0.0;
};

/// Local Markov property of the enumerated joint with respect to the variant
/// graph: each variable is independent of its nondescendants given its
/// parents (fixed halves excluded). Implies every d-separation-derived
/// independence.
std::vector<MarkovCheck> local_markov_cmis(const ScenarioSpec& spec, GraphVariant v,
                                           int z_value = 1);

}  // namespace transportlab
