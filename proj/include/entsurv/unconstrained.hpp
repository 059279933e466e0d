#pragma once

// Maximum entropy-rate stationary policy of a communicating MDP.

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "entsurv/entropy_program.hpp"

namespace entsurv {

class DegenerateOccupation : public std::runtime_error {
 public:
  DegenerateOccupation(StateIndex s, double mass)
      : std::runtime_error("degenerate occupation at state " + std::to_string(s) + " (mass " + std::to_string(mass) + ")"),
        state(s) {}
  StateIndex state;
};

struct CommunicatingSolution {
  StationaryPolicy policy;
  double entropy_rate_value = 0.0;
  Occupation gamma;
  double gap = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline CommunicatingSolution decode_occupation(const Mdp& mdp, const EntropySolution& sol) {
  CommunicatingSolution out;
  std::vector<std::vector<double>> rows(mdp.num_states());
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    double mass = 0.0;
    for (double g : sol.gamma[s]) mass += g;
    if (mass < 1e-9) throw DegenerateOccupation(s, mass);
    for (double g : sol.gamma[s]) rows[s].push_back(g / mass);
  }
  out.policy = StationaryPolicy(std::move(rows));
  out.entropy_rate_value = sol.objective;
  out.gamma = sol.gamma;
  out.gap = sol.gap;
  out.iterations = sol.iterations;
  return out;
}

}  // namespace detail

/// mu(s,a) = gamma(s,a) / sum_a gamma(s,a) from the entropy program's optimum.
inline CommunicatingSolution max_entropy_rate_policy(const Mdp& mdp, const EntropySolveOptions& opt = {}) {
  EntropySolution sol = solve_entropy_program(mdp, opt);
  try {
    return detail::decode_occupation(mdp, sol);
  } catch (const DegenerateOccupation&) {
    // Retry from a perturbed interior start with a tighter tolerance.
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    std::vector<std::vector<double>> rows(mdp.num_states());
    for (StateIndex s = 0; s < mdp.num_states(); ++s) {
      double z = 0.0;
      for (std::size_t a = 0; a < mdp.num_actions(s); ++a) z += rows[s].emplace_back(jitter(rng));
      for (double& v : rows[s]) v /= z;
    }
    StationaryPolicy start(std::move(rows));
    EntropySolveOptions retry = opt;
    retry.tol = opt.tol * 1e-2;
    retry.start = &start;
    return detail::decode_occupation(mdp, solve_entropy_program(mdp, retry));
  }
}

}  // namespace entsurv
