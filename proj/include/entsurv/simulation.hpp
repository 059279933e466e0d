#pragma once

// Seeded trajectory sampling, empirical entropy rate and a windowed surveillance monitor.
//
// RNG: xoshiro256** seeded through splitmix64. Path i of a batch with seed S uses
// the generator seeded from S + i * 0x9E3779B97F4A7C15, so batches do not depend on
// evaluation order. Uniform doubles take the top 53 bits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "entsurv/chain.hpp"
#include "entsurv/mdp.hpp"

namespace entsurv {

class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

struct Step {
  std::uint32_t state;
  std::uint32_t action;  // local action index

  bool operator==(const Step&) const = default;
};

struct TrajectoryBatch {
  std::uint64_t seed = 0;
  std::size_t num_paths = 0;
  std::size_t horizon = 0;
  std::vector<std::vector<Step>> paths;  // horizon steps each
  std::vector<std::size_t> visit_counts;  // over all steps of all paths

  bool operator==(const TrajectoryBatch&) const = default;
};

namespace detail {

inline std::size_t sample_index(std::span<const double> cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto i = static_cast<std::size_t>(it - cumulative.begin());
  // Rounding can leave the last cumulative entry just below 1; pick the last positive entry.
  if (i >= cumulative.size()) {
    i = cumulative.size() - 1;
    while (i > 0 && cumulative[i] == cumulative[i - 1]) --i;
  }
  return i;
}

inline std::vector<double> cumulate(std::span<const double> p) {
  std::vector<double> c(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) c[i] = acc += p[i];
  return c;
}

}  // namespace detail

inline TrajectoryBatch sample_paths(const Mdp& mdp, const StationaryPolicy& policy, std::size_t horizon,
                                    std::size_t num_paths, std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("sample_paths: horizon must be at least 1");
  policy.validate(mdp);
  const std::size_t n = mdp.num_states();
  std::vector<double> init_cum = detail::cumulate(mdp.initial());
  std::vector<std::vector<double>> action_cum(n);
  std::vector<std::vector<std::vector<double>>> succ_cum(n);
  for (StateIndex s = 0; s < n; ++s) {
    action_cum[s] = detail::cumulate(policy.row(s));
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
      std::vector<double> p;
      for (const auto& t : mdp.successors(s, a)) p.push_back(t.prob);
      succ_cum[s].push_back(detail::cumulate(p));
    }
  }

  TrajectoryBatch batch;
  batch.seed = seed;
  batch.num_paths = num_paths;
  batch.horizon = horizon;
  batch.visit_counts.assign(n, 0);
  batch.paths.resize(num_paths);
  for (std::size_t i = 0; i < num_paths; ++i) {
    Xoshiro256 rng(seed + static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ULL);
    auto& path = batch.paths[i];
    path.reserve(horizon);
    StateIndex s = detail::sample_index(init_cum, rng.uniform());
    for (std::size_t k = 0; k < horizon; ++k) {
      std::size_t a = detail::sample_index(action_cum[s], rng.uniform());
      path.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(a)});
      ++batch.visit_counts[s];
      std::size_t j = detail::sample_index(succ_cum[s][a], rng.uniform());
      s = mdp.successors(s, a)[j].target;
    }
  }
  return batch;
}

/// Occupancy over the second half of every path, pooled.
inline std::vector<double> empirical_occupancy(const TrajectoryBatch& batch, std::size_t num_states) {
  std::vector<double> f(num_states, 0.0);
  double total = 0.0;
  for (const auto& path : batch.paths) {
    for (std::size_t k = path.size() / 2; k < path.size(); ++k) {
      f[path[k].state] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0)
    for (double& v : f) v /= total;
  return f;
}

/// Semi-empirical estimate: empirical second-half occupancy times the chain's exact local entropies.
inline double empirical_entropy_rate(const TrajectoryBatch& batch, const MarkovChain& chain) {
  auto f = empirical_occupancy(batch, chain.num_states());
  double rate = 0.0;
  for (StateIndex s = 0; s < chain.num_states(); ++s)
    if (f[s] > 0.0) rate += f[s] * local_entropy(chain, s);
  return rate;
}

/// Pure plug-in estimate from second-half transition counts.
inline double plugin_entropy_rate(const TrajectoryBatch& batch, std::size_t num_states) {
  std::vector<std::map<std::uint32_t, double>> counts(num_states);
  std::vector<double> out(num_states, 0.0);
  double total = 0.0;
  for (const auto& path : batch.paths) {
    for (std::size_t k = path.size() / 2; k + 1 < path.size(); ++k) {
      counts[path[k].state][path[k + 1].state] += 1.0;
      out[path[k].state] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) return 0.0;
  double rate = 0.0;
  for (StateIndex s = 0; s < num_states; ++s) {
    if (out[s] == 0.0) continue;
    double h = 0.0;
    for (const auto& [t, c] : counts[s]) h -= (c / out[s]) * std::log2(c / out[s]);
    rate += (out[s] / total) * h;
  }
  return rate;
}

/// Fraction of paths whose trailing half, cut into consecutive blocks of `window` steps
/// ending at the horizon, visits B in every block.
inline double surveillance_monitor(const TrajectoryBatch& batch, const std::vector<StateIndex>& targets,
                                   std::size_t window) {
  if (window < 1 || window > batch.horizon) throw std::invalid_argument("surveillance_monitor: bad window");
  if (batch.paths.empty()) return 1.0;
  std::size_t max_state = 0;
  for (const auto& path : batch.paths)
    for (const auto& st : path) max_state = std::max<std::size_t>(max_state, st.state);
  std::vector<bool> in_b(max_state + 1, false);
  for (StateIndex b : targets)
    if (b <= max_state) in_b[b] = true;

  std::size_t passed = 0;
  for (const auto& path : batch.paths) {
    const std::size_t h = path.size();
    bool ok = true;
    for (std::size_t end = h; ok && end >= window && (end == h || end - window >= h / 2); end -= window) {
      bool seen = false;
      for (std::size_t k = end - window; k < end && !seen; ++k) seen = in_b[path[k].state];
      ok = seen;
    }
    if (ok) ++passed;
  }
  return static_cast<double>(passed) / static_cast<double>(batch.paths.size());
}

/// CSV with header path_id,step,state,action (names).
inline void write_batch_csv(std::ostream& os, const TrajectoryBatch& batch, const Mdp& mdp) {
  os << "path_id,step,state,action\n";
  for (std::size_t i = 0; i < batch.paths.size(); ++i)
    for (std::size_t k = 0; k < batch.paths[i].size(); ++k) {
      const auto& st = batch.paths[i][k];
      os << i << ',' << k << ',' << mdp.state_name(st.state) << ',' << mdp.action_name(st.state, st.action) << '\n';
    }
}

}  // namespace entsurv
