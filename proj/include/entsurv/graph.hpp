#pragma once

// Graph structure of MDPs: reachability, SCCs, maximal end components,
// level classification and almost-sure reachability pruning.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "entsurv/mdp.hpp"

namespace entsurv {

using Digraph = std::vector<std::vector<std::size_t>>;

/// Strongly connected components of a digraph (iterative Tarjan).
struct SccResult {
  std::vector<std::size_t> component;               // vertex -> component id
  std::vector<std::vector<std::size_t>> components;  // reverse topological order: sinks first
};

inline SccResult strongly_connected_components(const Digraph& graph) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = graph.size();
  SccResult out;
  out.component.assign(n, kUnvisited);
  std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> call;  // (vertex, next edge position)
  std::size_t counter = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < graph[v].size()) {
        std::size_t w = graph[v][pos++];
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          out.component[w] = out.components.size();
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.components.push_back(std::move(comp));
      }
      std::size_t finished = v;
      call.pop_back();
      if (!call.empty()) {
        std::size_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return out;
}

/// Union digraph: edge s -> s' iff P(s'|s,a) > 0 for some available a.
inline Digraph underlying_digraph(const Mdp& mdp) {
  Digraph g(mdp.num_states());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    for (const auto& row : mdp.actions(s))
      for (const auto& t : row.successors) g[s].push_back(t.target);
    std::sort(g[s].begin(), g[s].end());
    g[s].erase(std::unique(g[s].begin(), g[s].end()), g[s].end());
  }
  return g;
}

/// reach(s): every state reachable from s (including s) in the union digraph.
inline std::vector<StateIndex> reach_set(const Mdp& mdp, StateIndex s) {
  if (s >= mdp.num_states()) throw std::out_of_range("reach_set: state index out of range");
  std::vector<bool> seen(mdp.num_states(), false);
  std::vector<StateIndex> frontier{s};
  seen[s] = true;
  while (!frontier.empty()) {
    StateIndex v = frontier.back();
    frontier.pop_back();
    for (const auto& row : mdp.actions(v))
      for (const auto& t : row.successors)
        if (!seen[t.target]) {
          seen[t.target] = true;
          frontier.push_back(t.target);
        }
  }
  std::vector<StateIndex> out;
  for (StateIndex v = 0; v < seen.size(); ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

/// A maximal end component. `actions[i]` lists the parent-local actions of `states[i]`.
struct Mec {
  std::vector<StateIndex> states;
  std::vector<std::vector<std::size_t>> actions;
  bool accepting = false;

  bool contains(StateIndex s) const { return std::binary_search(states.begin(), states.end(), s); }

  /// Action map indexed by parent state, as expected by restrict().
  std::vector<std::vector<std::size_t>> action_map(std::size_t num_states) const {
    std::vector<std::vector<std::size_t>> map(num_states);
    for (std::size_t i = 0; i < states.size(); ++i) map[states[i]] = actions[i];
    return map;
  }

  bool operator==(const Mec&) const = default;
};

namespace detail {

inline std::vector<Mec> mec_fixpoint(const Mdp& mdp, std::vector<bool> alive,
                                     std::vector<std::vector<std::size_t>> allowed) {
  const std::size_t n = mdp.num_states();
  SccResult scc;
  for (;;) {
    Digraph g(n);
    for (StateIndex s = 0; s < n; ++s) {
      if (!alive[s]) continue;
      for (std::size_t a : allowed[s])
        for (const auto& t : mdp.successors(s, a)) g[s].push_back(t.target);
    }
    scc = strongly_connected_components(g);

    bool changed = false;
    for (StateIndex s = 0; s < n; ++s) {
      if (!alive[s]) continue;
      auto& acts = allowed[s];
      auto keep = [&](std::size_t a) {
        for (const auto& t : mdp.successors(s, a))
          if (!alive[t.target] || scc.component[t.target] != scc.component[s]) return false;
        return true;
      };
      auto end = std::stable_partition(acts.begin(), acts.end(), keep);
      if (end != acts.end()) {
        acts.erase(end, acts.end());
        changed = true;
      }
    }
    for (StateIndex s = 0; s < n; ++s) {
      if (alive[s] && allowed[s].empty()) {
        alive[s] = false;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<Mec> mecs;
  for (const auto& comp : scc.components) {
    Mec mec;
    for (std::size_t v : comp) {
      if (!alive[v]) continue;
      mec.states.push_back(v);
      mec.actions.push_back(allowed[v]);
    }
    if (!mec.states.empty()) mecs.push_back(std::move(mec));
  }
  std::sort(mecs.begin(), mecs.end(), [](const Mec& a, const Mec& b) { return a.states.front() < b.states.front(); });
  return mecs;
}

}  // namespace detail

/// Maximal end components, ordered by their smallest state index.
inline std::vector<Mec> mec_decomposition(const Mdp& mdp) {
  std::vector<std::vector<std::size_t>> allowed(mdp.num_states());
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) allowed[s].push_back(a);
  return detail::mec_fixpoint(mdp, std::vector<bool>(mdp.num_states(), true), std::move(allowed));
}

/// MECs of a sub-MDP (states and actions indexed by the parent).
inline std::vector<Mec> mec_decomposition(const SubMdp& sub) {
  const Mdp& mdp = sub.parent();
  std::vector<bool> alive(mdp.num_states(), false);
  std::vector<std::vector<std::size_t>> allowed(mdp.num_states());
  for (StateIndex s : sub.states()) {
    alive[s] = true;
    allowed[s] = sub.allowed(s);
  }
  return detail::mec_fixpoint(mdp, std::move(alive), std::move(allowed));
}

/// Marks each MEC accepting iff it intersects `targets`.
inline void mark_accepting(std::vector<Mec>& mecs, const std::vector<StateIndex>& targets) {
  for (auto& mec : mecs) {
    mec.accepting = std::any_of(targets.begin(), targets.end(), [&](StateIndex b) { return mec.contains(b); });
  }
}

inline bool is_communicating(const Mdp& mdp) {
  auto mecs = mec_decomposition(mdp);
  if (mecs.size() != 1 || mecs.front().states.size() != mdp.num_states()) return false;
  for (std::size_t i = 0; i < mecs.front().states.size(); ++i)
    if (mecs.front().actions[i].size() != mdp.num_actions(mecs.front().states[i])) return false;
  return true;
}

/// MEC levels L_k and transient levels T_k.
struct LevelDecomposition {
  std::vector<Mec> mecs;
  std::vector<std::size_t> mec_level;                  // per MEC
  std::vector<std::vector<StateIndex>> mec_levels;     // L_0..L_K
  std::vector<std::vector<StateIndex>> transient_levels;  // T_0..T_K
  std::size_t max_level = 0;
  std::vector<std::optional<std::size_t>> mec_of_state;  // state -> MEC index

  std::vector<StateIndex> mec_states() const {
    std::vector<StateIndex> out;
    for (const auto& level : mec_levels) out.insert(out.end(), level.begin(), level.end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// Peels levels on the MDP with every MEC contracted to one vertex.
/// Requires `mecs == mec_decomposition(mdp)`.
inline LevelDecomposition classify_levels(const Mdp& mdp, std::vector<Mec> mecs) {
  const std::size_t n = mdp.num_states();
  LevelDecomposition out;
  out.mec_of_state.assign(n, std::nullopt);
  for (std::size_t i = 0; i < mecs.size(); ++i)
    for (StateIndex s : mecs[i].states) out.mec_of_state[s] = i;

  // Contracted graph: vertices 0..m-1 are MECs, m.. are transient states.
  const std::size_t m = mecs.size();
  std::vector<std::size_t> vertex(n);
  std::vector<StateIndex> transient;
  for (StateIndex s = 0; s < n; ++s) {
    if (out.mec_of_state[s]) {
      vertex[s] = *out.mec_of_state[s];
    } else {
      vertex[s] = m + transient.size();
      transient.push_back(s);
    }
  }
  Digraph contracted(m + transient.size());
  for (StateIndex s = 0; s < n; ++s)
    for (const auto& row : mdp.actions(s))
      for (const auto& t : row.successors)
        if (vertex[t.target] != vertex[s]) contracted[vertex[s]].push_back(vertex[t.target]);

  // Condensation: each node holds at most one MEC (MECs are mutually unreachable).
  auto scc = strongly_connected_components(contracted);
  const std::size_t nodes = scc.components.size();
  std::vector<std::optional<std::size_t>> node_mec(nodes);
  for (std::size_t i = 0; i < m; ++i) node_mec[scc.component[i]] = i;
  Digraph reverse(nodes);
  for (std::size_t v = 0; v < contracted.size(); ++v)
    for (std::size_t w : contracted[v])
      if (scc.component[v] != scc.component[w]) reverse[scc.component[w]].push_back(scc.component[v]);

  auto backward = [&](const std::vector<std::size_t>& seeds) {
    std::vector<bool> mark(nodes, false);
    std::vector<std::size_t> frontier;
    for (std::size_t s : seeds)
      if (!mark[s]) {
        mark[s] = true;
        frontier.push_back(s);
      }
    while (!frontier.empty()) {
      std::size_t v = frontier.back();
      frontier.pop_back();
      for (std::size_t w : reverse[v])
        if (!mark[w]) {
          mark[w] = true;
          frontier.push_back(w);
        }
    }
    return mark;
  };

  std::vector<bool> mec_done(m, false), transient_done(transient.size(), false);
  std::size_t remaining = m;
  out.mec_level.assign(m, 0);
  for (std::size_t k = 0; remaining > 0; ++k) {
    // Nodes that strictly reach a node holding an undetermined MEC.
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < m; ++i)
      if (!mec_done[i])
        for (std::size_t p : reverse[scc.component[i]]) seeds.push_back(p);
    auto strict = backward(seeds);

    std::vector<StateIndex> level;
    for (std::size_t i = 0; i < m; ++i) {
      if (mec_done[i] || strict[scc.component[i]]) continue;
      out.mec_level[i] = k;
      level.insert(level.end(), mecs[i].states.begin(), mecs[i].states.end());
    }
    for (std::size_t i = 0; i < m; ++i)
      if (!mec_done[i] && !strict[scc.component[i]]) {
        mec_done[i] = true;
        --remaining;
      }
    std::sort(level.begin(), level.end());
    out.mec_levels.push_back(std::move(level));

    seeds.clear();
    for (std::size_t i = 0; i < m; ++i)
      if (!mec_done[i]) seeds.push_back(scc.component[i]);
    auto inclusive = backward(seeds);
    std::vector<StateIndex> tlevel;
    for (std::size_t j = 0; j < transient.size(); ++j) {
      if (transient_done[j] || inclusive[scc.component[m + j]]) continue;
      transient_done[j] = true;
      tlevel.push_back(transient[j]);
    }
    out.transient_levels.push_back(std::move(tlevel));
  }
  out.max_level = out.mec_levels.empty() ? 0 : out.mec_levels.size() - 1;
  out.mecs = std::move(mecs);
  return out;
}

inline LevelDecomposition classify_levels(const Mdp& mdp) { return classify_levels(mdp, mec_decomposition(mdp)); }

/// Almost-sure winning region for reaching a target set, with the actions that keep it closed.
struct WinningRegion {
  std::vector<StateIndex> states;
  std::vector<std::vector<std::size_t>> allowed;  // indexed by state; empty outside the region

  bool contains(StateIndex s) const { return std::binary_search(states.begin(), states.end(), s); }
};

/// States from which some policy reaches the union of `amecs` with probability one.
inline WinningRegion almost_sure_winning(const Mdp& mdp, const std::vector<Mec>& amecs) {
  const std::size_t n = mdp.num_states();
  std::vector<bool> target(n, false), alive(n, true);
  for (const auto& mec : amecs)
    for (StateIndex s : mec.states) target[s] = true;
  std::vector<std::vector<std::size_t>> allowed(n);
  for (StateIndex s = 0; s < n; ++s)
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) allowed[s].push_back(a);

  // reverse[t] = (s, a) pairs with P(t|s,a) > 0
  std::vector<std::vector<std::pair<StateIndex, std::size_t>>> reverse(n);
  for (StateIndex s = 0; s < n; ++s)
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a)
      for (const auto& t : mdp.successors(s, a)) reverse[t.target].push_back({s, a});

  for (;;) {
    std::vector<bool> reaches(n, false);
    std::vector<StateIndex> frontier;
    for (StateIndex s = 0; s < n; ++s)
      if (alive[s] && target[s]) {
        reaches[s] = true;
        frontier.push_back(s);
      }
    while (!frontier.empty()) {
      StateIndex t = frontier.back();
      frontier.pop_back();
      for (auto [s, a] : reverse[t]) {
        if (!alive[s] || reaches[s]) continue;
        if (std::find(allowed[s].begin(), allowed[s].end(), a) == allowed[s].end()) continue;
        reaches[s] = true;
        frontier.push_back(s);
      }
    }
    bool changed = false;
    for (StateIndex s = 0; s < n; ++s)
      if (alive[s] && !reaches[s]) {
        alive[s] = false;
        allowed[s].clear();
        changed = true;
      }
    // Drop actions that can leak out of the region; repeat until stable.
    bool again = true;
    while (again) {
      again = false;
      for (StateIndex s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        auto& acts = allowed[s];
        auto end = std::remove_if(acts.begin(), acts.end(), [&](std::size_t a) {
          for (const auto& t : mdp.successors(s, a))
            if (!alive[t.target]) return true;
          return false;
        });
        if (end != acts.end()) {
          acts.erase(end, acts.end());
          changed = again = true;
        }
        if (acts.empty()) {
          alive[s] = false;
          changed = again = true;
        }
      }
    }
    if (!changed) break;
  }

  WinningRegion out;
  out.allowed.assign(n, {});
  for (StateIndex s = 0; s < n; ++s)
    if (alive[s]) {
      out.states.push_back(s);
      out.allowed[s] = allowed[s];
    }
  return out;
}

/// DOT rendering of the contracted level graph.
inline std::string level_graph_dot(const Mdp& mdp, const LevelDecomposition& levels) {
  const std::size_t m = levels.mecs.size();
  auto node = [&](StateIndex s) {
    if (auto i = levels.mec_of_state[s]) return "mec" + std::to_string(*i);
    return "s" + std::to_string(s);
  };
  std::ostringstream dot;
  dot << "digraph levels {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < m; ++i) {
    dot << "  mec" << i << " [shape=box" << (levels.mecs[i].accepting ? ",peripheries=2" : "") << ",label=\"L"
        << levels.mec_level[i] << ": {";
    for (std::size_t j = 0; j < levels.mecs[i].states.size(); ++j)
      dot << (j ? "," : "") << mdp.state_name(levels.mecs[i].states[j]);
    dot << "}\"];\n";
  }
  for (std::size_t k = 0; k < levels.transient_levels.size(); ++k)
    for (StateIndex s : levels.transient_levels[k])
      dot << "  s" << s << " [shape=ellipse,label=\"T" << k << ": " << mdp.state_name(s) << "\"];\n";
  std::vector<std::pair<std::string, std::string>> edges;
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (const auto& row : mdp.actions(s))
      for (const auto& t : row.successors)
        if (node(s) != node(t.target)) edges.emplace_back(node(s), node(t.target));
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [a, b] : edges) dot << "  " << a << " -> " << b << ";\n";
  dot << "}\n";
  return dot.str();
}

}  // namespace entsurv
