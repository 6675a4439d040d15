#include "transportlab/scenarios.hpp"

#include <algorithm>

namespace transportlab {

namespace {

Node measured(std::string name) { return Node{std::move(name), NodeKind::Measured, {}}; }
Node latent(std::string name) { return Node{std::move(name), NodeKind::Unmeasured, {}}; }

using Edges = std::vector<std::pair<std::string, std::string>>;

CausalGraph make_structure(StructureId id) {
  std::vector<Node> nodes{measured("X"), measured("S"), measured("Z"), measured("A"),
                          measured("Y")};
  Edges edges{{"X", "S"}, {"X", "Z"}, {"X", "Y"}, {"S", "Z"}, {"Z", "A"}, {"A", "Y"}};
  std::vector<std::pair<std::string, std::string>> copies;
  std::vector<RandomizedWhen> randomized{{"Z", "S", "1"}};

  switch (id) {
    case StructureId::Fig1:
      nodes.push_back(latent("U"));
      edges.insert(edges.end(), {{"U", "Z"}, {"U", "Y"}});
      copies.emplace_back("Z", "A");
      break;
    case StructureId::Fig2:
      nodes.push_back(latent("U"));
      edges.insert(edges.end(),
                   {{"X", "A"}, {"S", "A"}, {"U", "Z"}, {"U", "A"}, {"U", "Y"}});
      break;
    case StructureId::Fig3:
      nodes.push_back(latent("U1"));
      nodes.push_back(latent("U2"));
      edges.insert(edges.end(), {{"X", "A"},
                                 {"U1", "S"},
                                 {"U1", "A"},
                                 {"U2", "Z"},
                                 {"U2", "A"},
                                 {"U2", "Y"}});
      break;
    case StructureId::Combined:
      nodes.push_back(latent("U1"));
      nodes.push_back(latent("U2"));
      edges.insert(edges.end(), {{"X", "A"},
                                 {"S", "A"},
                                 {"U1", "S"},
                                 {"U1", "A"},
                                 {"U2", "Z"},
                                 {"U2", "A"},
                                 {"U2", "Y"}});
      break;
    case StructureId::TrialConditional:
      // Combined structure among participants: the unmeasured cause of
      // assignment drops because assignment is randomized inside the trial.
      nodes.push_back(latent("U1"));
      nodes.push_back(latent("U2"));
      edges.insert(edges.end(),
                   {{"X", "A"}, {"S", "A"}, {"U1", "S"}, {"U1", "A"}, {"U2", "A"}, {"U2", "Y"}});
      break;
  }
  return build_graph(std::move(nodes), std::move(edges), std::move(copies),
                     std::move(randomized));
}

}  // namespace

std::string_view scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::Fig1PerfectAdherence: return "fig1";
    case ScenarioId::Fig2DirectEffect: return "fig2";
    case ScenarioId::Fig3CommonCauses: return "fig3";
    case ScenarioId::CombinedAppendix: return "combined";
  }
  return "fig1";
}

std::string_view structure_name(StructureId id) {
  switch (id) {
    case StructureId::Fig1: return "fig1";
    case StructureId::Fig2: return "fig2";
    case StructureId::Fig3: return "fig3";
    case StructureId::Combined: return "combined";
    case StructureId::TrialConditional: return "trial-conditional";
  }
  return "fig1";
}

ScenarioId scenario_from_name(std::string_view name) {
  for (ScenarioId id : kAllScenarios) {
    if (name == scenario_name(id)) return id;
  }
  // Long-form aliases used in config files.
  if (name == "fig1_perfect_adherence") return ScenarioId::Fig1PerfectAdherence;
  if (name == "fig2_direct_effect") return ScenarioId::Fig2DirectEffect;
  if (name == "fig3_common_causes") return ScenarioId::Fig3CommonCauses;
  if (name == "combined_appendix") return ScenarioId::CombinedAppendix;
  fail(Err::UnknownScenario, std::string(name));
}

StructureId structure_from_name(std::string_view name) {
  for (StructureId id : kAllStructures) {
    if (name == structure_name(id)) return id;
  }
  if (name == "trial_conditional" || name == "trial") return StructureId::TrialConditional;
  return structure_of(scenario_from_name(name));
}

StructureId structure_of(ScenarioId id) {
  switch (id) {
    case ScenarioId::Fig1PerfectAdherence: return StructureId::Fig1;
    case ScenarioId::Fig2DirectEffect: return StructureId::Fig2;
    case ScenarioId::Fig3CommonCauses: return StructureId::Fig3;
    case ScenarioId::CombinedAppendix: return StructureId::Combined;
  }
  return StructureId::Fig1;
}

CausalGraph scenario_graph(StructureId id) { return make_structure(id); }

std::string_view variant_name(GraphVariant v) {
  switch (v) {
    case GraphVariant::Dag: return "dag";
    case GraphVariant::AssignSwig: return "do(Z=z)";
    case GraphVariant::JointSwig: return "do(S=1,Z=z)";
  }
  return "dag";
}

CausalGraph variant_graph(StructureId id, GraphVariant v) {
  CausalGraph g = scenario_graph(id);
  switch (v) {
    case GraphVariant::Dag: return g;
    case GraphVariant::AssignSwig: return split_intervene(g, {{"Z", "z"}});
    case GraphVariant::JointSwig: return split_intervene(g, {{"S", "1"}, {"Z", "z"}});
  }
  return g;
}

namespace {

IndependenceClaim claim(StructureId s, int k, GraphVariant v, DSepQuery q, bool sep,
                        std::string note) {
  return IndependenceClaim{std::string(structure_name(s)) + ".dsep." + std::to_string(k),
                           s, v, std::move(q), sep, std::move(note)};
}

}  // namespace

std::vector<IndependenceClaim> independence_table(StructureId id) {
  using GV = GraphVariant;
  std::vector<IndependenceClaim> rows;
  switch (id) {
    case StructureId::Fig1:
      rows.push_back(claim(id, 1, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X"}}, false,
                           "assignment is confounded with the counterfactual outcome given covariates"));
      rows.push_back(claim(id, 2, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X", "S"}}, false,
                           "conditioning on participation does not close the confounding path"));
      rows.push_back(claim(id, 3, GV::JointSwig, {{"Y^{s=1,z}"}, {"S"}, {"X"}}, true,
                           "participation is exchangeable for the joint counterfactual given covariates"));
      rows.push_back(claim(id, 4, GV::JointSwig, {{"Y^{s=1,z}"}, {"Z^{s=1}"}, {"X", "S"}}, true,
                           "in-trial assignment is exchangeable for the joint counterfactual"));
      break;
    case StructureId::Fig2:
      rows.push_back(claim(id, 1, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X"}}, false,
                           "assignment-only counterfactual remains confounded given covariates"));
      rows.push_back(claim(id, 2, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X", "S"}}, false,
                           "still confounded after conditioning on participation"));
      rows.push_back(claim(id, 3, GV::JointSwig, {{"Y^{s=1,z}"}, {"S"}, {"X"}}, true,
                           "participation is exchangeable for the joint counterfactual given covariates"));
      rows.push_back(claim(id, 4, GV::JointSwig, {{"Y^{s=1,z}"}, {"Z^{s=1}"}, {"X", "S"}}, true,
                           "in-trial assignment is exchangeable for the joint counterfactual"));
      break;
    case StructureId::Fig3:
      rows.push_back(claim(id, 1, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X"}}, false,
                           "assignment-only counterfactual is confounded through shared causes"));
      rows.push_back(claim(id, 2, GV::JointSwig, {{"Y^{s=1,z}"}, {"S"}, {"X"}}, false,
                           "participation shares an unmeasured cause with adherence"));
      rows.push_back(claim(id, 3, GV::JointSwig, {{"Y^{s=1,z}"}, {"S"}, {"X", "A^{s=1,z}"}}, false,
                           "conditioning on treatment received opens a collider"));
      rows.push_back(claim(id, 4, GV::JointSwig, {{"Y^{s=1,z}"}, {"Z^{s=1}"}, {"X", "S"}}, true,
                           "in-trial assignment stays exchangeable"));
      break;
    case StructureId::Combined:
      rows.push_back(claim(id, 1, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X"}}, false,
                           "assignment-only counterfactual is confounded"));
      rows.push_back(claim(id, 2, GV::JointSwig, {{"Y^{s=1,z}"}, {"S"}, {"X"}}, false,
                           "participation shares an unmeasured cause with adherence"));
      rows.push_back(claim(id, 3, GV::JointSwig, {{"Y^{s=1,z}"}, {"Z^{s=1}"}, {"X", "S"}}, true,
                           "in-trial assignment stays exchangeable"));
      break;
    case StructureId::TrialConditional:
      rows.push_back(claim(id, 1, GV::AssignSwig, {{"Y^z"}, {"Z"}, {"X", "S"}}, true,
                           "among participants assignment is exchangeable given covariates"));
      break;
  }
  return rows;
}

std::vector<IndependenceClaim> independence_table_all() {
  std::vector<IndependenceClaim> rows;
  for (StructureId id : kAllStructures) {
    auto r = independence_table(id);
    rows.insert(rows.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  }
  return rows;
}

}  // namespace transportlab
