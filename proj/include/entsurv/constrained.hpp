#pragma once

// Entropy-rate maximization under a surveillance (visit B infinitely often w.p.1) constraint.
// Level-by-level: stay values of MECs, one LP per level, policy decoding and fusion.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "entsurv/chain.hpp"
#include "entsurv/graph.hpp"
#include "entsurv/lp.hpp"
#include "entsurv/mdp.hpp"
#include "entsurv/unconstrained.hpp"

namespace entsurv {

/// Extended real: nullopt stands for -infinity.
using Value = std::optional<double>;

inline bool value_greater(const Value& a, const Value& b, double tol) {
  if (!a) return false;
  if (!b) return true;
  return *a > *b + tol;
}

struct SurveillanceProblem {
  const Mdp* mdp = nullptr;
  std::vector<StateIndex> targets;  // B
};

class NoFeasiblePolicy : public std::runtime_error {
 public:
  NoFeasiblePolicy(std::vector<StateIndex> states, const std::string& msg)
      : std::runtime_error(msg), offending(std::move(states)) {}
  std::vector<StateIndex> offending;
};

class SynthesisFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PrunedProblem {
  SubMdp sub;
  std::vector<StateIndex> excluded;
};

inline void validate_problem(const SurveillanceProblem& problem) {
  if (!problem.mdp) throw std::invalid_argument("surveillance problem without an MDP");
  if (problem.targets.empty()) throw std::invalid_argument("target set B is empty");
  for (StateIndex b : problem.targets)
    if (b >= problem.mdp->num_states()) throw std::out_of_range("target state index out of range");
}

/// Restricts to the almost-sure winning region. Throws NoFeasiblePolicy if supp(pi0) leaves it.
inline PrunedProblem prune_to_winning(const SurveillanceProblem& problem) {
  validate_problem(problem);
  const Mdp& mdp = *problem.mdp;
  auto mecs = mec_decomposition(mdp);
  mark_accepting(mecs, problem.targets);
  std::vector<Mec> amecs;
  for (const auto& m : mecs)
    if (m.accepting) amecs.push_back(m);
  WinningRegion w = almost_sure_winning(mdp, amecs);

  std::vector<StateIndex> bad, excluded;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (w.contains(s)) continue;
    excluded.push_back(s);
    if (mdp.initial()[s] > 0.0) bad.push_back(s);
  }
  if (!bad.empty() || w.states.empty()) {
    std::string msg = "no policy visits B infinitely often with probability one from initial state(s):";
    for (StateIndex s : bad) msg += " " + mdp.state_name(s);
    throw NoFeasiblePolicy(bad, msg);
  }
  return {restrict(mdp, w.states, w.allowed), std::move(excluded)};
}

struct StayValue {
  Value value;  // without the epsilon shift
  std::vector<std::vector<double>> fragment;  // aligned with Mec::states / Mec::actions
  std::size_t iterations = 0;
  double gap = 0.0;
};

/// Stay value of each MEC: its maximal entropy rate if accepting, -infinity otherwise.
inline std::vector<StayValue> stay_values(const Mdp& mdp, const std::vector<Mec>& mecs,
                                          const EntropySolveOptions& opt = {}) {
  std::vector<StayValue> out;
  for (const auto& mec : mecs) {
    StayValue sv;
    if (mec.accepting) {
      auto sub = restrict(mdp, mec.states, mec.action_map(mdp.num_states())).materialize();
      auto sol = max_entropy_rate_policy(sub.mdp, opt);
      sv.value = sol.entropy_rate_value;
      sv.iterations = sol.iterations;
      sv.gap = sol.gap;
      for (std::size_t i = 0; i < mec.states.size(); ++i) sv.fragment.push_back(sol.policy.row(i));
    } else {
      for (std::size_t i = 0; i < mec.states.size(); ++i) {
        std::vector<double> row(mec.actions[i].size(), 0.0);
        row[0] = 1.0;
        sv.fragment.push_back(std::move(row));
      }
    }
    out.push_back(std::move(sv));
  }
  return out;
}

/// Occupation LP of one level: variables gamma(s,a) for s in Q and a in `actions[s]`.
struct LevelLp {
  LinearProgram lp;
  std::vector<std::pair<StateIndex, std::size_t>> columns;  // variable -> (state, local action)
  std::vector<bool> sentinel_flow;                           // variable reaches a -infinity state
};

/// Builds the level LP. `boundary` holds val_k (already shifted) on R^_k; states absent from it
/// are not boundary states. `alpha` is indexed like `q`.
inline LevelLp build_level_lp(const Mdp& mdp, const std::vector<StateIndex>& q,
                              const std::vector<std::vector<std::size_t>>& actions,
                              const std::map<StateIndex, Value>& boundary, const std::vector<double>& alpha) {
  LevelLp out;
  double max_finite = 0.0;
  for (const auto& [s, v] : boundary)
    if (v) max_finite = std::max(max_finite, std::abs(*v));
  const double penalty = -(static_cast<double>(mdp.num_states()) * max_finite + 1.0);

  std::map<StateIndex, std::size_t> row_of;
  for (std::size_t i = 0; i < q.size(); ++i) row_of[q[i]] = i;
  std::vector<LinearConstraint> rows(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) rows[i].rhs = alpha[i];

  for (StateIndex s : q) {
    for (std::size_t a : actions[s]) {
      double coef = 0.0;
      bool sentinel = false;
      for (const auto& t : mdp.successors(s, a)) {
        auto it = boundary.find(t.target);
        if (it == boundary.end()) continue;
        if (it->second) {
          coef += t.prob * *it->second;
        } else {
          coef += t.prob * penalty;
          sentinel = true;
        }
      }
      std::size_t var = out.lp.add_variable(coef);
      out.columns.push_back({s, a});
      out.sentinel_flow.push_back(sentinel);
      rows[row_of.at(s)].terms.push_back({var, 1.0});
      for (const auto& t : mdp.successors(s, a))
        if (auto it = row_of.find(t.target); it != row_of.end()) rows[it->second].terms.push_back({var, -t.prob});
    }
  }
  for (auto& r : rows) out.lp.inequalities.push_back(std::move(r));
  return out;
}

struct LevelLpResult {
  std::map<StateIndex, std::vector<double>> gamma;  // per state in Q, aligned with its allowed actions
  double objective = 0.0;
  std::size_t iterations = 0;
  std::size_t variables = 0;
  std::size_t constraints = 0;
};

inline LevelLpResult level_lp(const Mdp& mdp, const std::vector<StateIndex>& q,
                              const std::vector<std::vector<std::size_t>>& actions,
                              const std::map<StateIndex, Value>& boundary, const std::vector<double>& alpha) {
  LevelLpResult out;
  if (q.empty()) return out;
  LevelLp built = build_level_lp(mdp, q, actions, boundary, alpha);
  LpSolution sol = solve_lp(built.lp);
  for (StateIndex s : q) out.gamma[s].assign(actions[s].size(), 0.0);
  for (std::size_t v = 0; v < built.columns.size(); ++v) {
    auto [s, a] = built.columns[v];
    auto pos = std::find(actions[s].begin(), actions[s].end(), a) - actions[s].begin();
    out.gamma[s][static_cast<std::size_t>(pos)] = sol.x[v];
  }
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  out.variables = built.lp.num_vars();
  out.constraints = built.lp.inequalities.size();
  return out;
}

inline constexpr double kDecodeThreshold = 1e-9;

/// Normalizes gamma on Q*; states outside Q* take their first allowed action.
inline std::map<StateIndex, std::vector<double>> decode_policy(const std::map<StateIndex, std::vector<double>>& gamma) {
  std::map<StateIndex, std::vector<double>> out;
  for (const auto& [s, g] : gamma) {
    double mass = 0.0;
    for (double v : g) mass += v;
    std::vector<double> row(g.size(), 0.0);
    if (mass > kDecodeThreshold) {
      for (std::size_t a = 0; a < g.size(); ++a) row[a] = g[a] / mass;
    } else {
      row[0] = 1.0;
    }
    out[s] = std::move(row);
  }
  return out;
}

/// v' on Q for the chain `mc`: -infinity on states of Q that are recurrent or can reach a
/// recurrent Q state or a -infinity boundary state; the absorption value otherwise.
inline std::map<StateIndex, Value> transient_values(const MarkovChain& mc, const std::vector<StateIndex>& q,
                                                    const std::map<StateIndex, Value>& boundary) {
  std::map<StateIndex, Value> out;
  if (q.empty()) return out;
  std::map<StateIndex, std::size_t> local;
  for (std::size_t i = 0; i < q.size(); ++i) local[q[i]] = i;
  Digraph g(q.size());
  std::vector<bool> bad(q.size(), false);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (const auto& t : mc.row(q[i])) {
      if (auto it = local.find(t.target); it != local.end()) {
        g[i].push_back(it->second);
      } else {
        auto bv = boundary.find(t.target);
        if (bv == boundary.end()) throw std::logic_error("transient_values: successor outside Q and boundary");
        if (!bv->second) bad[i] = true;
      }
    }
  }
  // Recurrent within Q: SCC with no edge leaving Q's SCC and no exit to the boundary.
  auto scc = strongly_connected_components(g);
  std::vector<bool> exits(scc.components.size(), false);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j : g[i])
      if (scc.component[j] != scc.component[i]) exits[scc.component[i]] = true;
    if (mc.row(q[i]).size() > g[i].size()) exits[scc.component[i]] = true;
  }
  for (std::size_t i = 0; i < q.size(); ++i)
    if (!exits[scc.component[i]]) bad[i] = true;
  // Propagate badness backwards.
  Digraph rev(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j : g[i]) rev[j].push_back(i);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (bad[i]) frontier.push_back(i);
  while (!frontier.empty()) {
    std::size_t j = frontier.back();
    frontier.pop_back();
    for (std::size_t i : rev[j])
      if (!bad[i]) {
        bad[i] = true;
        frontier.push_back(i);
      }
  }
  std::vector<StateIndex> solvable;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (bad[i])
      out[q[i]] = std::nullopt;
    else
      solvable.push_back(q[i]);
  }
  std::map<StateIndex, double> finite_boundary;
  for (const auto& [s, v] : boundary)
    if (v) finite_boundary[s] = *v;
  auto v = transient_value_solve(mc, solvable, finite_boundary);
  for (std::size_t i = 0; i < solvable.size(); ++i) out[solvable[i]] = v[i];
  return out;
}

struct LevelDiagnostics {
  std::size_t level = 0;
  std::size_t q_size = 0;
  std::size_t lp_variables = 0;
  std::size_t lp_constraints = 0;
  std::size_t lp_iterations = 0;
  double lp_objective = 0.0;
  std::vector<StateIndex> decoded_mec_states;  // L_{k+1} states that left their MEC
  std::map<StateIndex, Value> values;          // val_{k+1} on R^_{k+1}, unshifted, parent indices
};

struct MecDiagnostics {
  std::vector<StateIndex> states;  // parent indices
  bool accepting = false;
  std::size_t level = 0;
  Value stay;
  std::size_t iterations = 0;
  double gap = 0.0;
};

struct SynthesisResult {
  StationaryPolicy policy;              // over the full MDP
  std::vector<Value> value_map;         // per state, unshifted; -infinity outside the winning region
  double global_rate = 0.0;             // sum_s pi0(s) value(s)
  double chain_rate = 0.0;              // entropy rate of the induced chain
  std::vector<StateIndex> excluded;     // outside the winning region
  std::vector<MecDiagnostics> mecs;
  std::vector<LevelDiagnostics> levels;
  LevelDecomposition decomposition;     // of the pruned MDP, in its local indices
  std::vector<StateIndex> pruned_states;  // local -> parent
};

struct SynthesisOptions {
  double epsilon = 1.0;
  double fuse_tol = 1e-9;
  EntropySolveOptions entropy;
};

namespace detail {

/// Fuses one level: decoded policy on T_k, per-MEC choice between decoded and stay on L_{k+1}.
inline void fuse_level(const std::vector<StateIndex>& t_k, const std::vector<std::size_t>& level_mecs,
                       const std::vector<Mec>& mecs, const std::vector<StayValue>& stays,
                       const std::map<StateIndex, std::vector<double>>& decoded,
                       const std::map<StateIndex, Value>& v_prime,
                       const std::vector<std::vector<std::size_t>>& allowed, const Mdp& mdp, double epsilon,
                       double tol, std::vector<std::vector<double>>& policy, std::vector<Value>& val,
                       std::vector<StateIndex>& decoded_mec_states) {
  auto apply_decoded = [&](StateIndex s) {
    policy[s].assign(mdp.num_actions(s), 0.0);
    const auto& row = decoded.at(s);
    for (std::size_t i = 0; i < row.size(); ++i) policy[s][allowed[s][i]] = row[i];
    val[s] = v_prime.at(s);
  };
  for (StateIndex s : t_k) apply_decoded(s);
  for (std::size_t m : level_mecs) {
    const Mec& mec = mecs[m];
    Value stay = stays[m].value ? Value(*stays[m].value + epsilon) : std::nullopt;
    Value worst = v_prime.at(mec.states.front());
    for (StateIndex s : mec.states) {
      const Value& v = v_prime.at(s);
      if (!v || (worst && *v < *worst)) worst = v;
    }
    if (value_greater(worst, stay, tol)) {
      for (StateIndex s : mec.states) {
        apply_decoded(s);
        decoded_mec_states.push_back(s);
      }
    } else {
      for (std::size_t i = 0; i < mec.states.size(); ++i) {
        StateIndex s = mec.states[i];
        policy[s].assign(mdp.num_actions(s), 0.0);
        for (std::size_t j = 0; j < mec.actions[i].size(); ++j) policy[s][mec.actions[i][j]] = stays[m].fragment[i][j];
        val[s] = stay;
      }
    }
  }
}

}  // namespace detail

inline SynthesisResult synthesize(const SurveillanceProblem& problem, const SynthesisOptions& opt = {}) {
  const Mdp& parent = *problem.mdp;
  PrunedProblem pruned = prune_to_winning(problem);
  MaterializedSubMdp local = pruned.sub.materialize();
  const Mdp& mdp = local.mdp;
  const std::size_t n = mdp.num_states();

  std::vector<StateIndex> parent_to_local(parent.num_states(), n);
  for (StateIndex i = 0; i < n; ++i) parent_to_local[local.to_parent_state[i]] = i;
  std::vector<StateIndex> targets;
  for (StateIndex b : problem.targets)
    if (parent_to_local[b] < n) targets.push_back(parent_to_local[b]);

  auto mecs = mec_decomposition(mdp);
  mark_accepting(mecs, targets);
  LevelDecomposition levels = classify_levels(mdp, mecs);
  auto stays = stay_values(mdp, levels.mecs, opt.entropy);

  SynthesisResult result;
  for (std::size_t m = 0; m < levels.mecs.size(); ++m) {
    MecDiagnostics d;
    for (StateIndex s : levels.mecs[m].states) d.states.push_back(local.to_parent_state[s]);
    d.accepting = levels.mecs[m].accepting;
    d.level = levels.mec_level[m];
    d.stay = stays[m].value;
    d.iterations = stays[m].iterations;
    d.gap = stays[m].gap;
    result.mecs.push_back(std::move(d));
  }

  std::vector<std::vector<double>> policy(n);
  std::vector<Value> val(n, std::nullopt);  // shifted by epsilon
  std::vector<bool> processed(n, false);
  auto mecs_at = [&](std::size_t k) {
    std::vector<std::size_t> ids;
    for (std::size_t m = 0; m < levels.mecs.size(); ++m)
      if (levels.mec_level[m] == k) ids.push_back(m);
    return ids;
  };
  auto snapshot = [&](LevelDiagnostics& d) {
    for (StateIndex s = 0; s < n; ++s)
      if (processed[s]) d.values[local.to_parent_state[s]] = val[s] ? Value(*val[s] - opt.epsilon) : std::nullopt;
  };

  // Level 0: stay everywhere.
  for (std::size_t m : mecs_at(0)) {
    const Mec& mec = levels.mecs[m];
    for (std::size_t i = 0; i < mec.states.size(); ++i) {
      StateIndex s = mec.states[i];
      policy[s].assign(mdp.num_actions(s), 0.0);
      for (std::size_t j = 0; j < mec.actions[i].size(); ++j) policy[s][mec.actions[i][j]] = stays[m].fragment[i][j];
      val[s] = stays[m].value ? Value(*stays[m].value + opt.epsilon) : std::nullopt;
      processed[s] = true;
    }
  }
  {
    LevelDiagnostics d;
    snapshot(d);
    result.levels.push_back(std::move(d));
  }

  for (std::size_t k = 0; k <= levels.max_level; ++k) {
    std::vector<StateIndex> q = levels.transient_levels[k];
    std::vector<std::size_t> next_mecs = k + 1 <= levels.max_level ? mecs_at(k + 1) : std::vector<std::size_t>{};
    for (std::size_t m : next_mecs) q.insert(q.end(), levels.mecs[m].states.begin(), levels.mecs[m].states.end());
    std::sort(q.begin(), q.end());

    LevelDiagnostics diag;
    diag.level = k + 1;
    diag.q_size = q.size();
    if (!q.empty()) {
      std::vector<bool> in_next(n, false);
      for (StateIndex s : q) in_next[s] = true;
      // Actions of the level sub-MDP: those staying inside R^_k and Q.
      std::vector<std::vector<std::size_t>> allowed(n);
      for (StateIndex s : q) {
        for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
          bool closed = true;
          for (const auto& t : mdp.successors(s, a))
            if (!processed[t.target] && !in_next[t.target]) closed = false;
          if (closed) allowed[s].push_back(a);
        }
        if (allowed[s].empty()) throw SynthesisFailure("level sub-MDP leaves state " + mdp.state_name(s) + " without actions");
      }
      std::map<StateIndex, Value> boundary;
      for (StateIndex s = 0; s < n; ++s)
        if (processed[s]) boundary[s] = val[s];
      std::vector<double> alpha(q.size(), 1.0 / static_cast<double>(q.size()));

      LevelLpResult lp;
      try {
        lp = level_lp(mdp, q, allowed, boundary, alpha);
      } catch (const std::exception& e) {
        throw SynthesisFailure("level " + std::to_string(k + 1) + " LP: " + e.what());
      }
      diag.lp_variables = lp.variables;
      diag.lp_constraints = lp.constraints;
      diag.lp_iterations = lp.iterations;
      diag.lp_objective = lp.objective;

      auto decoded = decode_policy(lp.gamma);
      // Chain on R^_{k+1}: current policy on R^_k, decoded on Q.
      std::vector<std::vector<Transition>> rows(n);
      for (StateIndex s : q) {
        std::map<StateIndex, double> acc;
        const auto& row = decoded.at(s);
        for (std::size_t i = 0; i < row.size(); ++i)
          if (row[i] > 0.0)
            for (const auto& t : mdp.successors(s, allowed[s][i])) acc[t.target] += row[i] * t.prob;
        for (auto [t, p] : acc) rows[s].push_back({t, p});
      }
      MarkovChain partial(std::move(rows), std::vector<double>(n, 0.0));
      auto v_prime = transient_values(partial, q, boundary);

      std::vector<StateIndex> t_k = levels.transient_levels[k];
      detail::fuse_level(t_k, next_mecs, levels.mecs, stays, decoded, v_prime, allowed, mdp, opt.epsilon,
                         opt.fuse_tol, policy, val, diag.decoded_mec_states);
      for (StateIndex& s : diag.decoded_mec_states) s = local.to_parent_state[s];
      for (StateIndex s : q) processed[s] = true;
    }
    snapshot(diag);
    result.levels.push_back(std::move(diag));
  }

  // Back to the parent MDP.
  std::vector<std::vector<double>> full(parent.num_states());
  result.value_map.assign(parent.num_states(), std::nullopt);
  for (StateIndex p = 0; p < parent.num_states(); ++p) {
    full[p].assign(parent.num_actions(p), 0.0);
    StateIndex s = parent_to_local[p];
    if (s == n) {
      full[p][0] = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < policy[s].size(); ++i) full[p][local.to_parent_action[s][i]] = policy[s][i];
    if (val[s]) result.value_map[p] = *val[s] - opt.epsilon;
  }
  result.policy = StationaryPolicy(std::move(full));
  result.excluded = pruned.excluded;
  result.pruned_states = local.to_parent_state;

  double rate = 0.0;
  for (StateIndex p = 0; p < parent.num_states(); ++p) {
    if (parent.initial()[p] <= 0.0) continue;
    if (!result.value_map[p])
      throw SynthesisFailure("initial state " + parent.state_name(p) + " ends with value -infinity");
    rate += parent.initial()[p] * *result.value_map[p];
  }
  result.global_rate = rate;
  result.chain_rate = entropy_rate(induce_chain(parent, result.policy));
  result.decomposition = std::move(levels);
  return result;
}

}  // namespace entsurv
