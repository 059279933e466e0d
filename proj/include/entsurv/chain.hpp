#pragma once

// Markov-chain analysis: recurrent classes, limit distributions, entropy rate,
// absorption values and the observation-cost metric.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "entsurv/graph.hpp"
#include "entsurv/linalg.hpp"
#include "entsurv/mdp.hpp"

namespace entsurv {

/// Recurrent classes, transient states, per-class stationary distributions and reach weights.
struct ChainStructure {
  std::vector<std::vector<StateIndex>> recurrent_classes;  // sorted, ordered by smallest state
  std::vector<StateIndex> transient_states;
  std::vector<std::vector<double>> stationary;  // stationary[k][i] belongs to recurrent_classes[k][i]
  std::vector<double> reach_weights;            // beta(k)
  std::vector<long> class_of;                   // state -> class index, -1 if transient
};

inline Digraph chain_digraph(const MarkovChain& mc) {
  Digraph g(mc.num_states());
  for (StateIndex s = 0; s < mc.num_states(); ++s)
    for (const auto& t : mc.row(s))
      if (t.prob > 0.0) g[s].push_back(t.target);
  return g;
}

/// Bottom SCCs of the chain digraph, sorted by smallest state.
inline std::vector<std::vector<StateIndex>> bottom_sccs(const Digraph& g) {
  auto scc = strongly_connected_components(g);
  std::vector<bool> bottom(scc.components.size(), true);
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t w : g[v])
      if (scc.component[w] != scc.component[v]) bottom[scc.component[v]] = false;
  std::vector<std::vector<StateIndex>> out;
  for (std::size_t c = 0; c < scc.components.size(); ++c)
    if (bottom[c]) out.push_back(scc.components[c]);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

inline ChainStructure chain_structure(const MarkovChain& mc) {
  const std::size_t n = mc.num_states();
  if (mc.initial().size() != n) throw DimensionMismatch("chain initial distribution size");
  ChainStructure out;
  out.recurrent_classes = bottom_sccs(chain_digraph(mc));
  out.class_of.assign(n, -1);
  for (std::size_t k = 0; k < out.recurrent_classes.size(); ++k)
    for (StateIndex s : out.recurrent_classes[k]) out.class_of[s] = static_cast<long>(k);
  for (StateIndex s = 0; s < n; ++s)
    if (out.class_of[s] < 0) out.transient_states.push_back(s);

  // sigma (P_R - I) = 0 with the last equation replaced by sum(sigma) = 1.
  for (const auto& cls : out.recurrent_classes) {
    const auto m = static_cast<Eigen::Index>(cls.size());
    std::map<StateIndex, Eigen::Index> local;
    for (Eigen::Index i = 0; i < m; ++i) local[cls[i]] = i;
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(m, m);  // a = (P_R - I)^T
    for (Eigen::Index i = 0; i < m; ++i)
      for (const auto& t : mc.row(cls[i])) a(local.at(t.target), i) += t.prob;
    a.row(m - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(m - 1) = 1.0;
    Eigen::VectorXd sigma = lu_solve(a, b, "stationary distribution");
    out.stationary.emplace_back(sigma.data(), sigma.data() + m);
  }

  // beta = pi0_R 1 + pi0_T (I - Q0)^{-1} Q_k e
  const std::size_t classes = out.recurrent_classes.size();
  out.reach_weights.assign(classes, 0.0);
  for (StateIndex s = 0; s < n; ++s)
    if (out.class_of[s] >= 0) out.reach_weights[out.class_of[s]] += mc.initial()[s];
  const auto nt = static_cast<Eigen::Index>(out.transient_states.size());
  if (nt > 0) {
    std::vector<Eigen::Index> tindex(n, -1);
    for (Eigen::Index i = 0; i < nt; ++i) tindex[out.transient_states[i]] = i;
    Eigen::MatrixXd i_minus_q = Eigen::MatrixXd::Identity(nt, nt);
    Eigen::MatrixXd exits = Eigen::MatrixXd::Zero(nt, static_cast<Eigen::Index>(classes));
    Eigen::RowVectorXd pi_t(nt);
    for (Eigen::Index i = 0; i < nt; ++i) {
      StateIndex s = out.transient_states[i];
      pi_t(i) = mc.initial()[s];
      for (const auto& t : mc.row(s)) {
        if (tindex[t.target] >= 0)
          i_minus_q(i, tindex[t.target]) -= t.prob;
        else
          exits(i, out.class_of[t.target]) += t.prob;
      }
    }
    Eigen::MatrixXd absorb = DenseLu(i_minus_q, "transient absorption").solve(exits);
    Eigen::RowVectorXd add = pi_t * absorb;
    for (std::size_t k = 0; k < classes; ++k) out.reach_weights[k] += add(static_cast<Eigen::Index>(k));
  }
  return out;
}

/// pi(s) = beta(k) sigma_k(s) on recurrent states, 0 on transient ones.
inline std::vector<double> limit_distribution(const ChainStructure& cs, std::size_t num_states) {
  std::vector<double> pi(num_states, 0.0);
  for (std::size_t k = 0; k < cs.recurrent_classes.size(); ++k)
    for (std::size_t i = 0; i < cs.recurrent_classes[k].size(); ++i)
      pi[cs.recurrent_classes[k][i]] = cs.reach_weights[k] * cs.stationary[k][i];
  return pi;
}

inline std::vector<double> limit_distribution(const MarkovChain& mc) {
  return limit_distribution(chain_structure(mc), mc.num_states());
}

/// Shannon entropy in bits, with 0 log 0 = 0.
inline double entropy_bits(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

inline double local_entropy(const MarkovChain& mc, StateIndex s) {
  double h = 0.0;
  for (const auto& t : mc.row(s))
    if (t.prob > 0.0) h -= t.prob * std::log2(t.prob);
  return h;
}

inline double entropy_rate(const MarkovChain& mc, const std::vector<double>& pi) {
  double rate = 0.0;
  for (StateIndex s = 0; s < mc.num_states(); ++s)
    if (pi[s] > 0.0) rate += pi[s] * local_entropy(mc, s);
  return rate;
}

inline double entropy_rate(const MarkovChain& mc) { return entropy_rate(mc, limit_distribution(mc)); }

/// Solves v = P_T v + P_boundary vals on `transient`. Every successor outside `transient`
/// must have a boundary value. Result is aligned with `transient`.
inline std::vector<double> transient_value_solve(const MarkovChain& mc, const std::vector<StateIndex>& transient,
                                                 const std::map<StateIndex, double>& boundary) {
  const auto nt = static_cast<Eigen::Index>(transient.size());
  if (nt == 0) return {};
  std::map<StateIndex, Eigen::Index> local;
  for (Eigen::Index i = 0; i < nt; ++i) local[transient[i]] = i;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(nt, nt);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(nt);
  for (Eigen::Index i = 0; i < nt; ++i) {
    for (const auto& t : mc.row(transient[i])) {
      if (auto it = local.find(t.target); it != local.end()) {
        a(i, it->second) -= t.prob;
      } else {
        auto bv = boundary.find(t.target);
        if (bv == boundary.end())
          throw std::invalid_argument("transient_value_solve: no boundary value for state " + std::to_string(t.target));
        b(i) += t.prob * bv->second;
      }
    }
  }
  Eigen::VectorXd v = lu_solve(a, b, "transient value solve");
  return {v.data(), v.data() + nt};
}

/// Expected codeword length of an optimal binary Huffman code (0 for a point mass).
inline double huffman_weight(std::span<const double> dist) {
  std::priority_queue<double, std::vector<double>, std::greater<>> heap;
  for (double p : dist)
    if (p > 0.0) heap.push(p);
  double weight = 0.0;
  while (heap.size() > 1) {
    double a = heap.top();
    heap.pop();
    double b = heap.top();
    heap.pop();
    weight += a + b;
    heap.push(a + b);
  }
  return weight;
}

/// Expected number of single-outcome yes/no probes when outcomes are probed from most to
/// least likely and the last one is inferred (0 for a point mass).
inline double sequential_probe_weight(std::span<const double> dist) {
  std::vector<double> p;
  for (double v : dist)
    if (v > 0.0) p.push_back(v);
  if (p.size() <= 1) return 0.0;
  std::sort(p.begin(), p.end(), std::greater<>());
  double weight = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) weight += p[i] * static_cast<double>(std::min(i + 1, p.size() - 1));
  return weight;
}

enum class ProbeModel { Huffman, Sequential };
enum class ProbeSupport { Successor, Action };

struct ObservationOptions {
  ProbeModel model = ProbeModel::Huffman;
  ProbeSupport support = ProbeSupport::Successor;
  bool min_probes_one = false;  // clamp each state's weight to at least 1
};

/// O_a = sum_s pi(s) Upsilon_s, with Upsilon_s the probe weight of state s's distribution.
inline double observation_cost(const Mdp& mdp, const StationaryPolicy& policy, const ObservationOptions& opt = {}) {
  MarkovChain mc = induce_chain(mdp, policy);
  std::vector<double> pi = limit_distribution(mc);
  double cost = 0.0;
  std::vector<double> dist;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    if (pi[s] <= 0.0) continue;
    dist.clear();
    if (opt.support == ProbeSupport::Successor) {
      for (const auto& t : mc.row(s)) dist.push_back(t.prob);
    } else {
      dist = policy.row(s);
    }
    double w = opt.model == ProbeModel::Huffman ? huffman_weight(dist) : sequential_probe_weight(dist);
    if (opt.min_probes_one) w = std::max(w, 1.0);
    cost += pi[s] * w;
  }
  return cost;
}

/// Largest minus smallest action probability at s.
inline double action_spread(const StationaryPolicy& policy, StateIndex s) {
  const auto& row = policy.row(s);
  auto [lo, hi] = std::minmax_element(row.begin(), row.end());
  return *hi - *lo;
}

}  // namespace entsurv
