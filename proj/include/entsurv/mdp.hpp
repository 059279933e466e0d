#pragma once

// Finite MDPs, stationary policies, induced Markov chains and sub-MDPs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace entsurv {

using StateIndex = std::size_t;
using ActionId = std::size_t;  // index into the global action alphabet

/// Absolute tolerance for every stochasticity check.
inline constexpr double kStochasticTol = 1e-9;

struct Transition {
  StateIndex target = 0;
  double prob = 0.0;

  bool operator==(const Transition&) const = default;
};

/// One available action of a state: its alphabet id plus a sparse successor row.
struct ActionRow {
  ActionId action = 0;
  std::vector<Transition> successors;  // sorted by target, all prob > 0
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid MDP:";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unvalidated description, as produced by a parser or generator.
struct RawMdp {
  struct Row {
    StateIndex state = 0;
    std::string action;
    std::vector<Transition> successors;
    std::size_t source_line = 0;  // 0 when not parsed from a file
  };
  std::vector<std::string> state_names;
  std::vector<Row> rows;
  std::vector<double> initial;  // may be empty: defaults to a point mass on state 0
};

/// Validated, immutable finite MDP.
class Mdp {
 public:
  Mdp() = default;

  std::size_t num_states() const noexcept { return actions_.size(); }
  std::size_t num_actions(StateIndex s) const { return actions_[s].size(); }
  std::span<const ActionRow> actions(StateIndex s) const { return actions_[s]; }
  const ActionRow& action(StateIndex s, std::size_t local) const { return actions_[s][local]; }
  std::span<const Transition> successors(StateIndex s, std::size_t local) const {
    return actions_[s][local].successors;
  }
  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<std::string>& state_names() const noexcept { return state_names_; }
  const std::vector<std::string>& action_names() const noexcept { return action_names_; }
  const std::string& state_name(StateIndex s) const { return state_names_[s]; }
  const std::string& action_name(StateIndex s, std::size_t local) const {
    return action_names_[actions_[s][local].action];
  }

  std::optional<StateIndex> find_state(const std::string& name) const {
    auto it = std::find(state_names_.begin(), state_names_.end(), name);
    if (it == state_names_.end()) return std::nullopt;
    return static_cast<StateIndex>(it - state_names_.begin());
  }
  std::optional<std::size_t> find_action(StateIndex s, const std::string& name) const {
    for (std::size_t i = 0; i < actions_[s].size(); ++i)
      if (action_name(s, i) == name) return i;
    return std::nullopt;
  }

  /// Number of distinct (s, s') pairs with P(s'|s,a) > 0 for some a.
  std::size_t num_edges() const {
    std::size_t count = 0;
    std::vector<StateIndex> targets;
    for (StateIndex s = 0; s < num_states(); ++s) {
      targets.clear();
      for (const auto& row : actions_[s])
        for (const auto& t : row.successors) targets.push_back(t.target);
      std::sort(targets.begin(), targets.end());
      count += static_cast<std::size_t>(std::unique(targets.begin(), targets.end()) - targets.begin());
    }
    return count;
  }

  /// Same structure with a different initial distribution (must be a probability vector).
  Mdp with_initial(std::vector<double> initial) const {
    if (initial.size() != num_states()) throw DimensionMismatch("initial distribution size");
    Mdp copy = *this;
    copy.initial_ = std::move(initial);
    return copy;
  }

 private:
  friend Mdp validate_mdp(const RawMdp&, std::vector<std::string>*);

  std::vector<std::string> state_names_;
  std::vector<std::string> action_names_;
  std::vector<std::vector<ActionRow>> actions_;
  std::vector<double> initial_;
};

namespace detail {

inline std::string row_label(const RawMdp& raw, const RawMdp::Row& row) {
  std::string where = row.source_line ? "line " + std::to_string(row.source_line) + ": " : "";
  std::string state = row.state < raw.state_names.size() ? raw.state_names[row.state]
                                                          : "#" + std::to_string(row.state);
  return where + "row (" + state + ", " + row.action + ")";
}

}  // namespace detail

/// Validates a raw description. Every violation is collected before throwing.
/// Rows whose probabilities sum to zero are dropped (reported through `warnings`).
inline Mdp validate_mdp(const RawMdp& raw, std::vector<std::string>* warnings = nullptr) {
  std::vector<std::string> errors;
  const std::size_t n = raw.state_names.size();
  if (n == 0) errors.emplace_back("MDP has no states");

  std::map<std::string, StateIndex> names;
  for (StateIndex s = 0; s < n; ++s) {
    if (raw.state_names[s].empty()) errors.push_back("state #" + std::to_string(s) + " has an empty name");
    if (!names.emplace(raw.state_names[s], s).second)
      errors.push_back("duplicate state name '" + raw.state_names[s] + "'");
  }

  Mdp mdp;
  mdp.state_names_ = raw.state_names;
  mdp.actions_.assign(n, {});
  std::map<std::string, ActionId> alphabet;

  for (const auto& row : raw.rows) {
    const std::string label = detail::row_label(raw, row);
    if (row.state >= n) {
      errors.push_back(label + ": dangling state index " + std::to_string(row.state));
      continue;
    }
    if (row.action.empty()) errors.push_back(label + ": empty action name");

    std::map<StateIndex, double> merged;
    bool row_ok = true;
    for (const auto& t : row.successors) {
      if (t.target >= n) {
        errors.push_back(label + ": dangling successor index " + std::to_string(t.target));
        row_ok = false;
      } else if (!std::isfinite(t.prob) || t.prob < 0.0 || t.prob > 1.0) {
        errors.push_back(label + ": probability " + std::to_string(t.prob) + " outside [0,1]");
        row_ok = false;
      } else if (t.prob > 0.0) {
        merged[t.target] += t.prob;
      }
    }
    if (!row_ok) continue;

    double sum = 0.0;
    for (const auto& [_, p] : merged) sum += p;
    if (merged.empty()) {
      if (warnings) warnings->push_back(label + ": all probabilities zero, action dropped");
      continue;
    }
    if (std::abs(sum - 1.0) > kStochasticTol) {
      errors.push_back(label + ": probabilities sum to " + std::to_string(sum) + ", expected 1");
      continue;
    }

    auto [it, inserted] = alphabet.emplace(row.action, alphabet.size());
    if (inserted) mdp.action_names_.push_back(row.action);
    auto& list = mdp.actions_[row.state];
    if (std::any_of(list.begin(), list.end(), [&](const ActionRow& r) { return r.action == it->second; })) {
      errors.push_back(label + ": duplicate action for this state");
      continue;
    }
    ActionRow ar{it->second, {}};
    for (const auto& [target, p] : merged) ar.successors.push_back({target, p});
    list.push_back(std::move(ar));
  }

  for (StateIndex s = 0; s < n; ++s)
    if (mdp.actions_[s].empty()) errors.push_back("state '" + raw.state_names[s] + "' has no available action");

  if (raw.initial.empty()) {
    mdp.initial_.assign(n, 0.0);
    if (n > 0) mdp.initial_[0] = 1.0;
  } else if (raw.initial.size() != n) {
    errors.push_back("initial distribution has " + std::to_string(raw.initial.size()) + " entries, expected " +
                     std::to_string(n));
  } else {
    double sum = 0.0;
    for (StateIndex s = 0; s < n; ++s) {
      double p = raw.initial[s];
      if (!std::isfinite(p) || p < 0.0)
        errors.push_back("initial probability of '" + raw.state_names[s] + "' is negative or not finite");
      else
        sum += p;
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
      errors.push_back("initial distribution sums to " + std::to_string(sum) + ", expected 1");
    mdp.initial_ = raw.initial;
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));
  return mdp;
}

/// Per-state distribution over the state's available actions (indexed locally).
class StationaryPolicy {
 public:
  StationaryPolicy() = default;
  explicit StationaryPolicy(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {}

  static StationaryPolicy uniform(const Mdp& mdp) {
    std::vector<std::vector<double>> rows(mdp.num_states());
    for (StateIndex s = 0; s < mdp.num_states(); ++s)
      rows[s].assign(mdp.num_actions(s), 1.0 / static_cast<double>(mdp.num_actions(s)));
    return StationaryPolicy(std::move(rows));
  }

  /// Point mass on local action `choice[s]` at every state.
  static StationaryPolicy deterministic(const Mdp& mdp, const std::vector<std::size_t>& choice) {
    if (choice.size() != mdp.num_states()) throw DimensionMismatch("deterministic policy size");
    std::vector<std::vector<double>> rows(mdp.num_states());
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
      rows[s].assign(mdp.num_actions(s), 0.0);
      rows[s].at(choice[s]) = 1.0;
    }
    return StationaryPolicy(std::move(rows));
  }

  std::size_t num_states() const noexcept { return rows_.size(); }
  const std::vector<double>& row(StateIndex s) const { return rows_[s]; }
  std::vector<double>& row(StateIndex s) { return rows_[s]; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  /// Throws ValidationError unless this is a valid policy for `mdp`.
  void validate(const Mdp& mdp) const {
    std::vector<std::string> errors;
    if (rows_.size() != mdp.num_states()) {
      throw DimensionMismatch("policy covers " + std::to_string(rows_.size()) + " states, MDP has " +
                              std::to_string(mdp.num_states()));
    }
    for (StateIndex s = 0; s < rows_.size(); ++s) {
      if (rows_[s].size() != mdp.num_actions(s)) {
        throw DimensionMismatch("policy row of state '" + mdp.state_name(s) + "' has " +
                                std::to_string(rows_[s].size()) + " entries, state has " +
                                std::to_string(mdp.num_actions(s)) + " actions");
      }
      double sum = 0.0;
      for (double p : rows_[s]) {
        if (!std::isfinite(p) || p < 0.0) errors.push_back("negative policy entry at '" + mdp.state_name(s) + "'");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kStochasticTol)
        errors.push_back("policy row of '" + mdp.state_name(s) + "' sums to " + std::to_string(sum));
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }

  bool operator==(const StationaryPolicy&) const = default;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Row-stochastic matrix (sparse rows) with an initial distribution.
class MarkovChain {
 public:
  MarkovChain() = default;
  MarkovChain(std::vector<std::vector<Transition>> rows, std::vector<double> initial)
      : rows_(std::move(rows)), initial_(std::move(initial)) {
    if (initial_.size() != rows_.size()) throw DimensionMismatch("chain initial distribution size");
  }

  /// Builds from a dense matrix, dropping exact zeros.
  static MarkovChain from_dense(const std::vector<std::vector<double>>& matrix, std::vector<double> initial) {
    std::vector<std::vector<Transition>> rows(matrix.size());
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      if (matrix[i].size() != matrix.size()) throw DimensionMismatch("chain matrix is not square");
      for (std::size_t j = 0; j < matrix[i].size(); ++j)
        if (matrix[i][j] != 0.0) rows[i].push_back({j, matrix[i][j]});
    }
    return MarkovChain(std::move(rows), std::move(initial));
  }

  std::size_t num_states() const noexcept { return rows_.size(); }
  std::span<const Transition> row(StateIndex s) const { return rows_[s]; }
  const std::vector<double>& initial() const noexcept { return initial_; }

  double prob(StateIndex from, StateIndex to) const {
    for (const auto& t : rows_[from])
      if (t.target == to) return t.prob;
    return 0.0;
  }

  std::vector<std::vector<double>> dense() const {
    std::vector<std::vector<double>> m(num_states(), std::vector<double>(num_states(), 0.0));
    for (StateIndex s = 0; s < num_states(); ++s)
      for (const auto& t : rows_[s]) m[s][t.target] += t.prob;
    return m;
  }

  MarkovChain with_initial(std::vector<double> initial) const { return MarkovChain(rows_, std::move(initial)); }

  void validate() const {
    std::vector<std::string> errors;
    for (StateIndex s = 0; s < num_states(); ++s) {
      double sum = 0.0;
      for (const auto& t : rows_[s]) {
        if (t.target >= num_states() || t.prob < 0.0 || t.prob > 1.0 + kStochasticTol)
          errors.push_back("bad entry in chain row " + std::to_string(s));
        sum += t.prob;
      }
      if (std::abs(sum - 1.0) > kStochasticTol) errors.push_back("chain row " + std::to_string(s) + " sums to " + std::to_string(sum));
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }

 private:
  std::vector<std::vector<Transition>> rows_;
  std::vector<double> initial_;
};

/// P^mu(i,j) = sum_a mu(i,a) P(j|i,a); the initial distribution is copied from the MDP.
inline MarkovChain induce_chain(const Mdp& mdp, const StationaryPolicy& policy) {
  if (policy.num_states() != mdp.num_states())
    throw DimensionMismatch("policy covers " + std::to_string(policy.num_states()) + " states, MDP has " +
                            std::to_string(mdp.num_states()));
  std::vector<std::vector<Transition>> rows(mdp.num_states());
  std::map<StateIndex, double> acc;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    const auto& mu = policy.row(s);
    if (mu.size() != mdp.num_actions(s))
      throw DimensionMismatch("policy row size mismatch at state '" + mdp.state_name(s) + "'");
    acc.clear();
    for (std::size_t a = 0; a < mu.size(); ++a) {
      if (mu[a] == 0.0) continue;
      for (const auto& t : mdp.successors(s, a)) acc[t.target] += mu[a] * t.prob;
    }
    for (const auto& [target, p] : acc)
      if (p > 0.0) rows[s].push_back({target, p});
  }
  return MarkovChain(std::move(rows), mdp.initial());
}

class NotClosed : public std::invalid_argument {
 public:
  NotClosed(StateIndex s, std::size_t action, StateIndex escape, const std::string& msg)
      : std::invalid_argument(msg), state(s), local_action(action), successor(escape) {}
  StateIndex state;
  std::size_t local_action;
  StateIndex successor;
};

class EmptyActionSet : public std::invalid_argument {
 public:
  EmptyActionSet(StateIndex s, const std::string& msg) : std::invalid_argument(msg), state(s) {}
  StateIndex state;
};

/// A standalone MDP built from a sub-MDP, with maps back to the parent.
struct MaterializedSubMdp {
  Mdp mdp;
  std::vector<StateIndex> to_parent_state;                // local state -> parent state
  std::vector<std::vector<std::size_t>> to_parent_action;  // local (s, a) -> parent local action
};

/// A closed sub-MDP (state subset plus per-state action restriction) of a parent MDP.
class SubMdp {
 public:
  const Mdp& parent() const { return *parent_; }
  const std::vector<StateIndex>& states() const noexcept { return states_; }
  bool contains(StateIndex s) const { return s < member_.size() && member_[s]; }
  /// Allowed parent-local action indices of `s` (empty when s is outside the subset).
  const std::vector<std::size_t>& allowed(StateIndex s) const { return allowed_[s]; }

  bool operator==(const SubMdp& o) const {
    return parent_ == o.parent_ && states_ == o.states_ && allowed_ == o.allowed_;
  }

  /// Reindexes the sub-MDP into its own Mdp. The initial distribution is the parent's,
  /// restricted and renormalized; uniform when the subset carries no initial mass.
  MaterializedSubMdp materialize() const {
    const Mdp& p = *parent_;
    std::vector<StateIndex> local(p.num_states(), 0);
    for (std::size_t i = 0; i < states_.size(); ++i) local[states_[i]] = i;

    RawMdp raw;
    MaterializedSubMdp out;
    out.to_parent_state = states_;
    out.to_parent_action.resize(states_.size());
    double mass = 0.0;
    for (StateIndex s : states_) mass += p.initial()[s];
    for (std::size_t i = 0; i < states_.size(); ++i) {
      StateIndex s = states_[i];
      raw.state_names.push_back(p.state_name(s));
      raw.initial.push_back(mass > 0.0 ? p.initial()[s] / mass : 1.0 / static_cast<double>(states_.size()));
      for (std::size_t a : allowed_[s]) {
        RawMdp::Row row{i, p.action_name(s, a), {}, 0};
        for (const auto& t : p.successors(s, a)) row.successors.push_back({local[t.target], t.prob});
        raw.rows.push_back(std::move(row));
        out.to_parent_action[i].push_back(a);
      }
    }
    // Renormalization can leave the initial sum off by rounding; pin it.
    if (mass > 0.0) {
      double sum = 0.0;
      for (double v : raw.initial) sum += v;
      for (double& v : raw.initial) v /= sum;
    }
    out.mdp = validate_mdp(raw);
    return out;
  }

 private:
  friend SubMdp restrict(const Mdp&, const std::vector<StateIndex>&, const std::vector<std::vector<std::size_t>>&);

  const Mdp* parent_ = nullptr;
  std::vector<StateIndex> states_;
  std::vector<bool> member_;
  std::vector<std::vector<std::size_t>> allowed_;
};

/// Restricts `mdp` to `subset` with per-state local action sets `action_map` (indexed by parent
/// state; entries outside the subset are ignored). Throws NotClosed or EmptyActionSet.
/// The returned SubMdp refers to `mdp`, which must outlive it.
inline SubMdp restrict(const Mdp& mdp, const std::vector<StateIndex>& subset,
                       const std::vector<std::vector<std::size_t>>& action_map) {
  if (subset.empty()) throw std::invalid_argument("restrict: empty state subset");
  if (action_map.size() != mdp.num_states()) throw DimensionMismatch("restrict: action map size");
  SubMdp sub;
  sub.parent_ = &mdp;
  sub.member_.assign(mdp.num_states(), false);
  sub.allowed_.assign(mdp.num_states(), {});
  for (StateIndex s : subset) {
    if (s >= mdp.num_states()) throw std::out_of_range("restrict: state index out of range");
    sub.member_[s] = true;
  }
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (sub.member_[s]) sub.states_.push_back(s);

  for (StateIndex s : sub.states_) {
    std::vector<std::size_t> acts = action_map[s];
    std::sort(acts.begin(), acts.end());
    acts.erase(std::unique(acts.begin(), acts.end()), acts.end());
    if (acts.empty()) throw EmptyActionSet(s, "restrict: state '" + mdp.state_name(s) + "' has no allowed action");
    for (std::size_t a : acts) {
      if (a >= mdp.num_actions(s)) throw std::out_of_range("restrict: action index out of range");
      for (const auto& t : mdp.successors(s, a)) {
        if (!sub.member_[t.target]) {
          throw NotClosed(s, a, t.target,
                          "restrict: action '" + mdp.action_name(s, a) + "' of '" + mdp.state_name(s) +
                              "' leaves the subset to '" + mdp.state_name(t.target) + "'");
        }
      }
    }
    sub.allowed_[s] = std::move(acts);
  }
  return sub;
}

/// Sub-MDP of all states with all actions.
inline SubMdp full_sub_mdp(const Mdp& mdp) {
  std::vector<StateIndex> all(mdp.num_states());
  std::vector<std::vector<std::size_t>> acts(mdp.num_states());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    all[s] = s;
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) acts[s].push_back(a);
  }
  return restrict(mdp, all, acts);
}

/// Numeric text output: 12 significant digits.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace entsurv
