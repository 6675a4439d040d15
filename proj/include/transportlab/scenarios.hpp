#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "transportlab/graph.hpp"

namespace transportlab {

/// Data-generating scenarios (each has a default simulation fixture).
enum class ScenarioId {
  Fig1PerfectAdherence,
  Fig2DirectEffect,
  Fig3CommonCauses,
  CombinedAppendix,
};

/// Registered graph structures: the four scenarios plus the trial-conditional
/// variant (combined structure with the unmeasured cause of assignment removed,
/// queries conditioned on participation).
enum class StructureId { Fig1, Fig2, Fig3, Combined, TrialConditional };

constexpr ScenarioId kAllScenarios[] = {
    ScenarioId::Fig1PerfectAdherence,
    ScenarioId::Fig2DirectEffect,
    ScenarioId::Fig3CommonCauses,
    ScenarioId::CombinedAppendix,
};

constexpr StructureId kAllStructures[] = {
    StructureId::Fig1, StructureId::Fig2, StructureId::Fig3,
    StructureId::Combined, StructureId::TrialConditional,
};

std::string_view scenario_name(ScenarioId id);    // "fig1" .. "combined"
std::string_view structure_name(StructureId id);  // adds "trial-conditional"
ScenarioId scenario_from_name(std::string_view name);
StructureId structure_from_name(std::string_view name);
StructureId structure_of(ScenarioId id);

/// The registered causal graph for a structure. Node set is X, S, Z, A, Y plus
/// the structure's unmeasured variables; annotations carry the deterministic
/// Z-to-A copy (Fig1) and the participation-triggered randomization of Z.
CausalGraph scenario_graph(StructureId id);

/// The three graph variants every structure is queried under.
enum class GraphVariant { Dag, AssignSwig, JointSwig };
std::string_view variant_name(GraphVariant v);  // "dag", "do(Z=z)", "do(S=1,Z=z)"

/// scenario_graph after the variant's split (Dag: unchanged).
CausalGraph variant_graph(StructureId id, GraphVariant v);

/// One row of the claimed-independence table.
struct IndependenceClaim {
  std::string claim_id;   // "fig2.dsep.1"
  StructureId structure;
  GraphVariant variant;
  DSepQuery query;        // names valid in variant_graph(structure, variant)
  bool expected_separated;
  std::string note;
};

/// Claimed (in)dependence rows for one structure. Every row's claim_id is
/// unique across structures.
std::vector<IndependenceClaim> independence_table(StructureId id);

/// Concatenation over all five structures.
std::vector<IndependenceClaim> independence_table_all();

}  // namespace transportlab
