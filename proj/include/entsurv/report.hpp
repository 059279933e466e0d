#pragma once

// Structured-text reports shared by the command-line tool and the tests.

#include <ostream>
#include <string>
#include <vector>

#include "entsurv/chain.hpp"
#include "entsurv/constrained.hpp"
#include "entsurv/graph.hpp"
#include "entsurv/mdp.hpp"

namespace entsurv {

inline std::string format_value(const Value& v) { return v ? format_number(*v) : "-inf"; }

inline std::string state_list(const Mdp& mdp, const std::vector<StateIndex>& states) {
  std::string out;
  for (StateIndex s : states) out += " " + mdp.state_name(s);
  return out;
}

/// MECs, levels, communicating flag and, when B is given, AMECs and the winning region.
inline void write_analysis(std::ostream& os, const Mdp& mdp, const std::vector<StateIndex>& targets) {
  auto mecs = mec_decomposition(mdp);
  mark_accepting(mecs, targets);
  auto levels = classify_levels(mdp, mecs);
  bool communicating = is_communicating(mdp);
  os << "states " << mdp.num_states() << "\n";
  os << "edges " << mdp.num_edges() << "\n";
  os << "communicating " << (communicating ? "true" : "false") << "\n";
  os << "mecs " << levels.mecs.size() << "\n";
  for (std::size_t i = 0; i < levels.mecs.size(); ++i) {
    const Mec& m = levels.mecs[i];
    os << "mec " << i << " level " << levels.mec_level[i] << " accepting " << (m.accepting ? 1 : 0) << " states"
       << state_list(mdp, m.states) << " actions";
    for (std::size_t j = 0; j < m.states.size(); ++j) {
      os << ' ' << mdp.state_name(m.states[j]) << ':';
      for (std::size_t k = 0; k < m.actions[j].size(); ++k)
        os << (k ? "," : "") << mdp.action_name(m.states[j], m.actions[j][k]);
    }
    os << "\n";
  }
  for (std::size_t k = 0; k <= levels.max_level; ++k) {
    os << "L" << k << state_list(mdp, levels.mec_levels[k]) << "\n";
    os << "T" << k << state_list(mdp, levels.transient_levels[k]) << "\n";
  }
  os << "levels " << levels.max_level << "\n";
  if (!targets.empty()) {
    std::vector<Mec> amecs;
    for (const auto& m : levels.mecs)
      if (m.accepting) amecs.push_back(m);
    os << "target" << state_list(mdp, targets) << "\n";
    os << "amecs " << amecs.size() << "\n";
    os << "winning" << state_list(mdp, almost_sure_winning(mdp, amecs).states) << "\n";
  }
}

struct ObservationReport {
  ObservationOptions selected;
  double selected_cost = 0.0;
  double huffman_successor = 0.0;
  double sequential_action = 0.0;
};

inline ObservationReport observation_report(const Mdp& mdp, const StationaryPolicy& policy,
                                            const ObservationOptions& selected) {
  ObservationReport r;
  r.selected = selected;
  r.selected_cost = observation_cost(mdp, policy, selected);
  r.huffman_successor = observation_cost(mdp, policy, {ProbeModel::Huffman, ProbeSupport::Successor, selected.min_probes_one});
  r.sequential_action = observation_cost(mdp, policy, {ProbeModel::Sequential, ProbeSupport::Action, selected.min_probes_one});
  return r;
}

inline void write_observation(std::ostream& os, const ObservationReport& r) {
  os << "observation_cost " << format_number(r.selected_cost) << "\n";
  os << "observation_model " << (r.selected.model == ProbeModel::Huffman ? "huffman" : "sequential") << ' '
     << (r.selected.support == ProbeSupport::Successor ? "successor" : "action") << " min_probes_one "
     << (r.selected.min_probes_one ? 1 : 0) << "\n";
  os << "observation_cost_huffman_successor " << format_number(r.huffman_successor) << "\n";
  os << "observation_cost_sequential_action " << format_number(r.sequential_action) << "\n";
}

inline void write_synthesis(std::ostream& os, const Mdp& mdp, const SynthesisResult& r, const ObservationReport& obs) {
  os << "format entsurv-result 1\n";
  os << "mode constrained\n";
  os << "global_rate " << format_number(r.global_rate) << "\n";
  os << "chain_rate " << format_number(r.chain_rate) << "\n";
  write_observation(os, obs);
  os << "excluded" << state_list(mdp, r.excluded) << "\n";
  for (std::size_t i = 0; i < r.mecs.size(); ++i) {
    const auto& m = r.mecs[i];
    os << "mec " << i << " level " << m.level << " accepting " << (m.accepting ? 1 : 0) << " stay "
       << format_value(m.stay) << " iterations " << m.iterations << " gap " << format_number(m.gap) << " states"
       << state_list(mdp, m.states) << "\n";
  }
  for (const auto& l : r.levels) {
    if (l.level == 0) continue;
    os << "stage " << l.level << " q " << l.q_size << " lp_variables " << l.lp_variables << " lp_constraints "
       << l.lp_constraints << " lp_iterations " << l.lp_iterations << " lp_objective " << format_number(l.lp_objective)
       << " left_mec" << state_list(mdp, l.decoded_mec_states) << "\n";
  }
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    os << "value " << mdp.state_name(s) << ' ' << format_value(r.value_map[s]) << "\n";
}

}  // namespace entsurv
