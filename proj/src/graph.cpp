#include "transportlab/graph.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace transportlab {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Base variable a rendered tag entry refers to: "s=1" -> "S", "z" -> "Z".
std::string entry_base(std::string_view entry) {
  auto eq = entry.find('=');
  std::string base(entry.substr(0, eq == std::string_view::npos ? entry.size() : eq));
  if (base.empty()) fail(Err::ParseError, "empty tag entry");
  base[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(base[0])));
  return base;
}

std::string join_tag(const std::vector<std::string>& tag) {
  std::string s;
  for (size_t i = 0; i < tag.size(); ++i) {
    if (i) s += ',';
    s += tag[i];
  }
  return s;
}

std::vector<int> toposort_or_cycle(int n, const std::vector<std::pair<int, int>>& edges,
                                   const std::vector<Node>& nodes) {
  std::vector<std::vector<int>> ch(n);
  std::vector<int> indeg(n, 0);
  for (auto [u, v] : edges) {
    ch[u].push_back(v);
    ++indeg[v];
  }
  std::vector<int> order;
  std::vector<int> q;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) q.push_back(i);
  while (!q.empty()) {
    int u = q.back();
    q.pop_back();
    order.push_back(u);
    for (int v : ch[u])
      if (--indeg[v] == 0) q.push_back(v);
  }
  if (static_cast<int>(order.size()) == n) return order;

  // Reconstruct one cycle for the error message.
  std::vector<int> state(n, 0);  // 0 unseen, 1 on stack, 2 done
  std::vector<int> stack, pos(n, -1);
  std::string cycle;
  auto dfs = [&](auto&& self, int u) -> bool {
    state[u] = 1;
    pos[u] = static_cast<int>(stack.size());
    stack.push_back(u);
    for (int v : ch[u]) {
      if (state[v] == 1) {
        for (size_t i = pos[v]; i < stack.size(); ++i) cycle += nodes[stack[i]].name() + " -> ";
        cycle += nodes[v].name();
        return true;
      }
      if (state[v] == 0 && self(self, v)) return true;
    }
    stack.pop_back();
    state[u] = 2;
    return false;
  };
  for (int i = 0; i < n && cycle.empty(); ++i)
    if (state[i] == 0) dfs(dfs, i);
  fail(Err::CycleDetected, cycle);
}

}  // namespace

std::string_view node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Measured: return "node";
    case NodeKind::Unmeasured: return "unmeasured";
    case NodeKind::FixedIntervention: return "fixed";
  }
  return "node";
}

std::string Node::name() const {
  if (kind == NodeKind::FixedIntervention) return join_tag(tag);
  if (tag.empty()) return base;
  std::string t = join_tag(tag);
  if (t.size() == 1) return base + "^" + t;
  return base + "^{" + t + "}";
}

std::string render_tag_entry(const Intervention& iv) {
  std::string lo = lower(iv.node);
  if (iv.label == lo) return iv.label;  // symbolic value, e.g. do(Z = z)
  return lo + "=" + iv.label;
}

int CausalGraph::index_of(std::string_view name) const {
  for (size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name() == name) return static_cast<int>(i);
  return -1;
}

int CausalGraph::require(std::string_view name) const {
  int i = index_of(name);
  if (i < 0) fail(Err::UnknownNode, std::string(name));
  return i;
}

bool CausalGraph::has_edge(std::string_view from, std::string_view to) const {
  int u = index_of(from), v = index_of(to);
  if (u < 0 || v < 0) return false;
  return std::binary_search(edges_.begin(), edges_.end(), std::pair<int, int>{u, v});
}

std::optional<std::string> CausalGraph::copy_source(std::string_view node) const {
  for (const auto& [src, dst] : copies_)
    if (dst == node) return src;
  return std::nullopt;
}

std::vector<int> CausalGraph::parents(int v) const {
  std::vector<int> out;
  for (auto [a, b] : edges_)
    if (b == v) out.push_back(a);
  return out;
}

std::vector<int> CausalGraph::children(int v) const {
  std::vector<int> out;
  for (auto [a, b] : edges_)
    if (a == v) out.push_back(b);
  return out;
}

CausalGraph build_graph(std::vector<Node> nodes,
                        std::vector<std::pair<std::string, std::string>> edges,
                        std::vector<std::pair<std::string, std::string>> copies,
                        std::vector<RandomizedWhen> randomized) {
  CausalGraph g;
  g.nodes_ = std::move(nodes);

  std::map<std::string, int> index;
  for (size_t i = 0; i < g.nodes_.size(); ++i) {
    std::string nm = g.nodes_[i].name();
    if (!index.emplace(nm, static_cast<int>(i)).second) fail(Err::DuplicateNode, nm);
  }

  for (const auto& [from, to] : edges) {
    auto fi = index.find(from);
    auto ti = index.find(to);
    if (fi == index.end()) fail(Err::DanglingEdge, from + " -> " + to + " (" + from + " undeclared)");
    if (ti == index.end()) fail(Err::DanglingEdge, from + " -> " + to + " (" + to + " undeclared)");
    if (g.nodes_[ti->second].kind == NodeKind::FixedIntervention)
      fail(Err::InvalidQuery, "edge into fixed node " + to);
    g.edges_.emplace_back(fi->second, ti->second);
  }
  std::sort(g.edges_.begin(), g.edges_.end());
  g.edges_.erase(std::unique(g.edges_.begin(), g.edges_.end()), g.edges_.end());

  toposort_or_cycle(static_cast<int>(g.nodes_.size()), g.edges_, g.nodes_);

  for (const auto& [src, dst] : copies) {
    if (!index.count(src)) fail(Err::UnknownNode, "copy source " + src);
    if (!index.count(dst)) fail(Err::UnknownNode, "copy destination " + dst);
  }
  for (const auto& r : randomized) {
    if (!index.count(r.node)) fail(Err::UnknownNode, "randomized node " + r.node);
    // when_node may name a variable that the current graph no longer carries
    // as a random node (already split); only the random target must exist.
  }
  g.copies_ = std::move(copies);
  g.randomizations_ = std::move(randomized);

  bool any_fixed = std::any_of(g.nodes_.begin(), g.nodes_.end(),
                               [](const Node& n) { return n.kind == NodeKind::FixedIntervention; });
  g.kind_ = any_fixed ? GraphKind::Swig : GraphKind::Dag;
  return g;
}

CausalGraph split_intervene(const CausalGraph& g, const std::vector<Intervention>& interventions) {
  if (interventions.empty()) return g;
  if (g.kind() != GraphKind::Dag) fail(Err::NotADag, "split_intervene requires an unsplit graph");

  std::set<std::string> seen;
  for (const auto& iv : interventions) {
    int idx = g.require(iv.node);
    if (g.nodes()[idx].kind != NodeKind::Measured)
      fail(Err::InterveneOnUnmeasured, iv.node);
    if (!seen.insert(iv.node).second) fail(Err::InvalidQuery, "duplicate intervention on " + iv.node);
  }

  const int n_old = static_cast<int>(g.nodes().size());
  std::vector<int> fixed_of(n_old, -1);  // old index -> intervention position
  for (size_t k = 0; k < interventions.size(); ++k)
    fixed_of[g.require(interventions[k].node)] = static_cast<int>(k);

  // New node list: original order, each fixed half right after its random half.
  std::vector<Node> nodes;
  std::vector<int> random_new(n_old), fixed_new(interventions.size());
  for (int i = 0; i < n_old; ++i) {
    random_new[i] = static_cast<int>(nodes.size());
    nodes.push_back(g.nodes()[i]);
    if (fixed_of[i] >= 0) {
      const auto& iv = interventions[fixed_of[i]];
      fixed_new[fixed_of[i]] = static_cast<int>(nodes.size());
      nodes.push_back(Node{iv.node, NodeKind::FixedIntervention, {render_tag_entry(iv)}});
    }
  }

  // Random halves keep incoming edges; fixed halves inherit outgoing edges.
  std::vector<std::pair<int, int>> edges;
  for (auto [u, v] : g.edges()) {
    int src = fixed_of[u] >= 0 ? fixed_new[fixed_of[u]] : random_new[u];
    edges.emplace_back(src, random_new[v]);
  }

  // Triggered randomization: drop unmeasured parents of the annotated node.
  std::vector<RandomizedWhen> remaining;
  for (const auto& r : g.randomizations()) {
    bool triggered = false;
    for (const auto& iv : interventions)
      if (iv.node == r.when_node && iv.label == r.when_label) triggered = true;
    if (!triggered) {
      remaining.push_back(r);
      continue;
    }
    int target = random_new[g.require(r.node)];
    std::erase_if(edges, [&](const std::pair<int, int>& e) {
      return e.second == target && nodes[e.first].kind == NodeKind::Unmeasured;
    });
  }

  // Downstream-of-fixed closure for counterfactual tags.
  const int n_new = static_cast<int>(nodes.size());
  std::vector<std::vector<int>> ch(n_new);
  for (auto [u, v] : edges) ch[u].push_back(v);
  std::vector<char> downstream(n_new, 0);
  std::vector<int> stack;
  for (size_t k = 0; k < interventions.size(); ++k) stack.push_back(fixed_new[k]);
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : ch[u])
      if (!downstream[v]) {
        downstream[v] = 1;
        stack.push_back(v);
      }
  }
  for (int i = 0; i < n_new; ++i) {
    Node& nd = nodes[i];
    if (nd.kind == NodeKind::FixedIntervention || !downstream[i]) continue;
    nd.tag.clear();
    for (const auto& iv : interventions)
      if (iv.node != nd.base) nd.tag.push_back(render_tag_entry(iv));
  }

  // Rebuild annotations against the renamed nodes.
  auto new_name = [&](const std::string& old) {
    int idx = g.index_of(old);
    if (idx < 0) return old;
    if (fixed_of[idx] >= 0) {
      // References to an intervened variable follow its fixed half: that is the
      // value downstream mechanisms consume.
      return nodes[fixed_new[fixed_of[idx]]].name();
    }
    return nodes[random_new[idx]].name();
  };
  std::vector<std::pair<std::string, std::string>> copies;
  for (const auto& [src, dst] : g.copies()) {
    int di = g.index_of(dst);
    std::string dst_name =
        (di >= 0 && fixed_of[di] >= 0) ? nodes[random_new[di]].name() : new_name(dst);
    copies.emplace_back(new_name(src), dst_name);
  }
  for (auto& r : remaining) r.node = nodes[random_new[g.require(r.node)]].name();

  std::sort(edges.begin(), edges.end());
  std::vector<std::pair<std::string, std::string>> edge_names;
  edge_names.reserve(edges.size());
  for (auto [u, v] : edges) edge_names.emplace_back(nodes[u].name(), nodes[v].name());
  return build_graph(std::move(nodes), std::move(edge_names), std::move(copies),
                     std::move(remaining));
}

namespace {

struct QueryIndex {
  std::vector<int> a, b;
  std::vector<char> cond;  // per node
};

QueryIndex validate_query(const CausalGraph& g, const DSepQuery& q) {
  if (q.set_a.empty() || q.set_b.empty()) fail(Err::InvalidQuery, "empty query set");
  QueryIndex out;
  out.cond.assign(g.nodes().size(), 0);
  std::vector<char> in_a(g.nodes().size(), 0), in_b(g.nodes().size(), 0);
  for (const auto& nm : q.set_a) {
    int i = g.require(nm);
    if (in_a[i]) fail(Err::InvalidQuery, "repeated node " + nm);
    in_a[i] = 1;
    out.a.push_back(i);
  }
  for (const auto& nm : q.set_b) {
    int i = g.require(nm);
    if (in_a[i] || in_b[i]) fail(Err::InvalidQuery, "query sets overlap at " + nm);
    in_b[i] = 1;
    out.b.push_back(i);
  }
  for (const auto& nm : q.conditioning) {
    int i = g.require(nm);
    if (in_a[i] || in_b[i]) fail(Err::InvalidQuery, "conditioning overlaps query at " + nm);
    if (out.cond[i]) fail(Err::InvalidQuery, "repeated node " + nm);
    out.cond[i] = 1;
  }
  return out;
}

}  // namespace

bool d_separated(const CausalGraph& g, const DSepQuery& q) {
  QueryIndex qi = validate_query(g, q);
  const int n = static_cast<int>(g.nodes().size());
  auto is_fixed = [&](int v) { return g.nodes()[v].kind == NodeKind::FixedIntervention; };

  std::vector<std::vector<int>> pa(n), ch(n);
  for (auto [u, v] : g.edges()) {
    if (is_fixed(u) || is_fixed(v)) continue;  // constants carry no dependence
    ch[u].push_back(v);
    pa[v].push_back(u);
  }

  // Ancestors of the conditioning set (inclusive), for collider opening.
  std::vector<char> anc(n, 0);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i)
    if (qi.cond[i] && !is_fixed(i)) {
      anc[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int p : pa[v])
      if (!anc[p]) {
        anc[p] = 1;
        stack.push_back(p);
      }
  }

  // Reachability through active trails. State: node x entered-from-parent flag.
  std::vector<std::array<char, 2>> seen(n, {0, 0});
  std::queue<std::pair<int, int>> bfs;  // (node, from_parent)
  for (int a : qi.a) {
    if (is_fixed(a)) continue;
    if (!seen[a][0]) {
      seen[a][0] = 1;
      bfs.emplace(a, 0);
    }
  }
  std::vector<char> target(n, 0);
  for (int b : qi.b) target[b] = 1;

  while (!bfs.empty()) {
    auto [v, from_parent] = bfs.front();
    bfs.pop();
    if (target[v]) return false;
    auto push = [&](int w, int fp) {
      if (!seen[w][fp]) {
        seen[w][fp] = 1;
        bfs.emplace(w, fp);
      }
    };
    if (!from_parent) {
      // Entered from a child (or a source node): v acts as chain/fork.
      if (!qi.cond[v]) {
        for (int p : pa[v]) push(p, 0);
        for (int c : ch[v]) push(c, 1);
      }
    } else {
      // Entered from a parent: chain down unless conditioned, collider up when
      // v or a descendant is conditioned.
      if (!qi.cond[v])
        for (int c : ch[v]) push(c, 1);
      if (anc[v])
        for (int p : pa[v]) push(p, 0);
    }
  }
  return true;
}

std::vector<std::string> open_paths(const CausalGraph& g, const std::string& a,
                                    const std::string& b,
                                    const std::vector<std::string>& conditioning) {
  DSepQuery q{{a}, {b}, conditioning};
  QueryIndex qi = validate_query(g, q);
  const int n = static_cast<int>(g.nodes().size());
  const int src = qi.a[0], dst = qi.b[0];
  auto is_fixed = [&](int v) { return g.nodes()[v].kind == NodeKind::FixedIntervention; };
  if (is_fixed(src) || is_fixed(dst)) return {};

  // Descendant closure per node (colliders open through conditioned descendants).
  std::vector<std::vector<int>> ch(n);
  for (auto [u, v] : g.edges())
    if (!is_fixed(u) && !is_fixed(v)) ch[u].push_back(v);
  std::vector<std::vector<char>> desc(n, std::vector<char>(n, 0));
  for (int s = 0; s < n; ++s) {
    std::vector<int> stack{s};
    desc[s][s] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : ch[u])
        if (!desc[s][v]) {
          desc[s][v] = 1;
          stack.push_back(v);
        }
    }
  }
  auto collider_open = [&](int v) {
    for (int w = 0; w < n; ++w)
      if (desc[v][w] && qi.cond[w]) return true;
    return false;
  };

  // Undirected adjacency: (neighbor, edge points v -> neighbor).
  std::vector<std::vector<std::pair<int, bool>>> adj(n);
  for (auto [u, v] : g.edges()) {
    if (is_fixed(u) || is_fixed(v)) continue;
    adj[u].emplace_back(v, true);
    adj[v].emplace_back(u, false);
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());

  std::vector<std::string> out;
  std::vector<char> on_path(n, 0);
  std::vector<std::pair<int, bool>> hops;  // (node, edge-into-node points forward)

  auto render = [&]() {
    std::string s = g.nodes()[src].name();
    for (auto [v, fwd] : hops) {
      s += fwd ? " -> " : " <- ";
      s += g.nodes()[v].name();
    }
    return s;
  };

  auto dfs = [&](auto&& self, int v, bool entered_into_v) -> void {
    if (v == dst) {
      out.push_back(render());
      return;
    }
    for (auto [w, fwd] : adj[v]) {
      if (on_path[w]) continue;
      if (v != src) {
        bool collider = entered_into_v && !fwd;  // prev -> v <- w
        bool passable = collider ? collider_open(v) : !qi.cond[v];
        if (!passable) continue;
      }
      on_path[w] = 1;
      hops.emplace_back(w, fwd);
      self(self, w, fwd);
      hops.pop_back();
      on_path[w] = 0;
    }
  };
  on_path[src] = 1;
  dfs(dfs, src, false);
  return out;
}

std::string emit_graph(const CausalGraph& g) {
  std::ostringstream os;
  for (const auto& nd : g.nodes()) os << node_kind_name(nd.kind) << ' ' << nd.name() << '\n';
  for (auto [u, v] : g.edges())
    os << g.nodes()[u].name() << " -> " << g.nodes()[v].name() << '\n';
  for (const auto& [src, dst] : g.copies()) os << "copy " << src << ' ' << dst << '\n';
  for (const auto& r : g.randomizations())
    os << "randomized " << r.node << " when " << r.when_node << '=' << r.when_label << '\n';
  return os.str();
}

namespace {

Node parse_node_name(std::string kind_word, const std::string& name) {
  Node nd;
  if (kind_word == "fixed") {
    nd.kind = NodeKind::FixedIntervention;
    nd.base = entry_base(name);
    nd.tag = {name};
    return nd;
  }
  nd.kind = kind_word == "unmeasured" ? NodeKind::Unmeasured : NodeKind::Measured;
  auto caret = name.find('^');
  if (caret == std::string::npos) {
    nd.base = name;
    return nd;
  }
  nd.base = name.substr(0, caret);
  std::string t = name.substr(caret + 1);
  if (t.size() >= 2 && t.front() == '{' && t.back() == '}') t = t.substr(1, t.size() - 2);
  if (t.empty()) fail(Err::ParseError, "empty counterfactual tag in " + name);
  size_t pos = 0;
  while (pos != std::string::npos) {
    auto comma = t.find(',', pos);
    nd.tag.push_back(t.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
    pos = comma == std::string::npos ? comma : comma + 1;
  }
  return nd;
}

}  // namespace

CausalGraph parse_graph(std::string_view text) {
  std::vector<Node> nodes;
  std::vector<std::pair<std::string, std::string>> edges, copies;
  std::vector<RandomizedWhen> randomized;

  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string w;
    while (ls >> w) tok.push_back(w);
    if (tok.empty() || tok[0][0] == '#') continue;
    auto bad = [&]() { fail(Err::ParseError, "line " + std::to_string(lineno) + ": " + line); };

    if (tok[0] == "node" || tok[0] == "unmeasured" || tok[0] == "fixed") {
      if (tok.size() != 2) bad();
      nodes.push_back(parse_node_name(tok[0], tok[1]));
    } else if (tok[0] == "copy") {
      if (tok.size() != 3) bad();
      copies.emplace_back(tok[1], tok[2]);
    } else if (tok[0] == "randomized") {
      // randomized <node> when <node>=<label>
      if (tok.size() != 4 || tok[2] != "when") bad();
      auto eq = tok[3].find('=');
      if (eq == std::string::npos) bad();
      randomized.push_back({tok[1], tok[3].substr(0, eq), tok[3].substr(eq + 1)});
    } else if (tok.size() == 3 && tok[1] == "->") {
      edges.emplace_back(tok[0], tok[2]);
    } else {
      bad();
    }
  }
  return build_graph(std::move(nodes), std::move(edges), std::move(copies), std::move(randomized));
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// Comma-separated names; commas nested in {...} belong to a tag, not the list.
std::vector<std::string> split_names(std::string_view s) {
  std::vector<std::string> pieces;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '{') ++depth;
    if (c == '}') --depth;
    if (c == ',' && depth == 0) {
      pieces.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  pieces.push_back(cur);
  std::vector<std::string> out;
  for (auto& p : pieces) out.push_back(trim(p));
  if (out.size() == 1 && out[0].empty()) return {};
  for (const auto& name : out)
    if (name.empty()) fail(Err::ParseError, "empty name in list: " + std::string(s));
  return out;
}

}  // namespace

DSepQuery parse_query(std::string_view text) {
  const std::string s(text);
  const auto sep = s.find("_||_");
  if (sep == std::string::npos)
    fail(Err::ParseError, "query must look like \"A _||_ B | C\": " + s);
  const std::string left = s.substr(0, sep);
  const std::string rest = s.substr(sep + 4);
  const auto bar = rest.find('|');
  DSepQuery q;
  q.set_a = split_names(left);
  q.set_b = split_names(bar == std::string::npos ? rest : rest.substr(0, bar));
  if (bar != std::string::npos) q.conditioning = split_names(rest.substr(bar + 1));
  if (q.set_a.empty() || q.set_b.empty())
    fail(Err::ParseError, "query needs nonempty sets on both sides: " + s);
  return q;
}

std::string render_query(const DSepQuery& q) {
  const auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += v[i];
    }
    return out;
  };
  std::string s = join(q.set_a) + " _||_ " + join(q.set_b);
  if (!q.conditioning.empty()) s += " | " + join(q.conditioning);
  return s;
}

std::string to_dot(const CausalGraph& g) {
  std::ostringstream os;
  os << "digraph causal {\n  rankdir=LR;\n";
  for (const auto& nd : g.nodes()) {
    os << "  \"" << nd.name() << "\"";
    switch (nd.kind) {
      case NodeKind::Measured: os << " [shape=ellipse]"; break;
      case NodeKind::Unmeasured: os << " [shape=ellipse, style=dashed]"; break;
      case NodeKind::FixedIntervention: os << " [shape=box]"; break;
    }
    os << ";\n";
  }
  for (auto [u, v] : g.edges())
    os << "  \"" << g.nodes()[u].name() << "\" -> \"" << g.nodes()[v].name() << "\";\n";
  for (const auto& [src, dst] : g.copies())
    os << "  \"" << src << "\" -> \"" << dst << "\" [style=dotted, label=\"copy\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace transportlab
