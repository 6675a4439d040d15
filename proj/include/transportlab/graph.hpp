#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "transportlab/errors.hpp"

namespace transportlab {

enum class NodeKind { Measured, Unmeasured, FixedIntervention };

std::string_view node_kind_name(NodeKind k);

/// A graph vertex. `base` is the variable name without any counterfactual tag
/// ("Y", "U1"). Random nodes render as base plus caret tag ("Y^{s=1,z}");
/// FixedIntervention nodes render as the tag entry alone ("z", "s=1").
struct Node {
  std::string base;
  NodeKind kind = NodeKind::Measured;
  std::vector<std::string> tag;  // rendered entries, intervention order

  std::string name() const;
  bool operator==(const Node&) const = default;
};

/// One intervention: set `node` to the value named `label`.
/// A label equal to the lowercased node name is symbolic and renders bare
/// ("z"); anything else renders as "s=1" style.
struct Intervention {
  std::string node;
  std::string label;
};

std::string render_tag_entry(const Intervention& iv);

/// Annotation: `node` has no unmeasured parents once `when_node` is fixed to
/// `when_label` (its assignment mechanism becomes an exogenous draw).
struct RandomizedWhen {
  std::string node;
  std::string when_node;
  std::string when_label;
  bool operator==(const RandomizedWhen&) const = default;
};

enum class GraphKind { Dag, Swig };

struct DSepQuery {
  std::vector<std::string> set_a;
  std::vector<std::string> set_b;
  std::vector<std::string> conditioning;
};

class CausalGraph {
 public:
  GraphKind kind() const { return kind_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  /// Directed edges as index pairs into nodes(), lexicographically sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  /// Deterministic-copy pairs (source name, destination name).
  const std::vector<std::pair<std::string, std::string>>& copies() const { return copies_; }
  const std::vector<RandomizedWhen>& randomizations() const { return randomizations_; }

  int index_of(std::string_view name) const;  // -1 when absent
  int require(std::string_view name) const;   // throws UnknownNode
  const Node& node(std::string_view name) const { return nodes_[require(name)]; }
  bool has_edge(std::string_view from, std::string_view to) const;
  /// Source a node is a deterministic copy of, if any.
  std::optional<std::string> copy_source(std::string_view node) const;

  std::vector<int> parents(int v) const;
  std::vector<int> children(int v) const;

 private:
  friend CausalGraph build_graph(std::vector<Node>, std::vector<std::pair<std::string, std::string>>,
                                 std::vector<std::pair<std::string, std::string>>,
                                 std::vector<RandomizedWhen>);
  friend CausalGraph split_intervene(const CausalGraph&, const std::vector<Intervention>&);

  GraphKind kind_ = GraphKind::Dag;
  std::vector<Node> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::pair<std::string, std::string>> copies_;
  std::vector<RandomizedWhen> randomizations_;
};

/// Validates and assembles a graph: unique names, edge endpoints present,
/// acyclic, FixedIntervention nodes without incoming edges. The result kind is
/// Dag when no FixedIntervention node is present, Swig otherwise.
CausalGraph build_graph(std::vector<Node> nodes,
                        std::vector<std::pair<std::string, std::string>> edges,
                        std::vector<std::pair<std::string, std::string>> copies = {},
                        std::vector<RandomizedWhen> randomized = {});

/// Splits every intervened node into its random half (keeps incoming edges,
/// keeps the name) and a FixedIntervention half (inherits outgoing edges,
/// named by the tag entry). Random nodes downstream of any fixed half receive
/// the full intervention set as their counterfactual tag, minus the entry for
/// the node itself. Triggered RandomizedWhen annotations drop unmeasured
/// parents of the affected random half. An empty intervention list returns the
/// input unchanged.
CausalGraph split_intervene(const CausalGraph& g, const std::vector<Intervention>& interventions);

/// True when every node in set_a is d-separated from every node in set_b given
/// the conditioning set. FixedIntervention nodes are constants: no path passes
/// through them and conditioning on them is a no-op.
bool d_separated(const CausalGraph& g, const DSepQuery& q);

/// Every open (unblocked) path between two nodes given a conditioning set,
/// rendered as "Z <- S -> A^z -> Y^z". Deterministic order; exhaustive.
std::vector<std::string> open_paths(const CausalGraph& g, const std::string& a,
                                    const std::string& b,
                                    const std::vector<std::string>& conditioning);

/// Query text form: "A,B _||_ C | D,E". The conditioning part is optional;
/// commas inside counterfactual tags ("Y^{s=1,z}") do not split names.
DSepQuery parse_query(std::string_view text);
std::string render_query(const DSepQuery& q);

/// Plain-text interchange form: one declaration or edge per line.
///   node X / unmeasured U / fixed z
///   X -> S
///   copy Z A
///   randomized Z when S=1
/// emit_graph(parse_graph(t)) reproduces t byte for byte for emitted t.
std::string emit_graph(const CausalGraph& g);
CausalGraph parse_graph(std::string_view text);

/// Graphviz dot form for external rendering.
std::string to_dot(const CausalGraph& g);

}  // namespace transportlab
