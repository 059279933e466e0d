#pragma once

// The entropy-rate program over occupation variables gamma(s,a) of a communicating MDP:
//   max  sum_{s,t} -q(s,t) log2(q(s,t) / lambda(s))
//   s.t. q(s,t) = sum_a gamma(s,a) P(t|s,a),  lambda(s) = sum_a gamma(s,a),
//        lambda(t) = sum_s q(s,t),  sum_s lambda(s) = 1,  gamma >= 0.
//
// Solved by policy iteration on the equivalent average-reward problem whose
// per-state decision is a point of the action simplex. Each improvement step
// maximizes H(p) + p.h over the simplex with Blahut-Arimoto updates. The bound
//   optimum <= max_s (max_a c_a(s) - h(s)),  c_a(s) = sum_t P(t|s,a) (h(t) - log2 p_s(t))
// holds for any bias h and certifies the returned gap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "entsurv/chain.hpp"
#include "entsurv/graph.hpp"
#include "entsurv/linalg.hpp"
#include "entsurv/mdp.hpp"

namespace entsurv {

using Occupation = std::vector<std::vector<double>>;  // gamma[s][local action]

class NotCommunicating : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(std::size_t iters, double gap_value, double residual_value)
      : std::runtime_error("entropy program did not converge after " + std::to_string(iters) +
                           " iterations (gap " + std::to_string(gap_value) + ", residual " +
                           std::to_string(residual_value) + ")"),
        iterations(iters),
        gap(gap_value),
        residual(residual_value) {}
  std::size_t iterations;
  double gap;
  double residual;
};

/// Objective and constraint residuals of the entropy program for a fixed MDP.
class EntropyProgram {
 public:
  explicit EntropyProgram(const Mdp& mdp) : mdp_(&mdp) {}

  /// q(s,.) as a dense row.
  std::vector<double> flow(const Occupation& gamma, StateIndex s) const {
    std::vector<double> q(mdp_->num_states(), 0.0);
    for (std::size_t a = 0; a < mdp_->num_actions(s); ++a)
      for (const auto& t : mdp_->successors(s, a)) q[t.target] += gamma[s][a] * t.prob;
    return q;
  }

  double visits(const Occupation& gamma, StateIndex s) const {
    double sum = 0.0;
    for (double g : gamma[s]) sum += g;
    return sum;
  }

  double objective(const Occupation& gamma) const {
    check_shape(gamma);
    double value = 0.0;
    for (StateIndex s = 0; s < mdp_->num_states(); ++s) {
      double lambda = visits(gamma, s);
      if (lambda <= 0.0) continue;
      for (double q : flow(gamma, s))
        if (q > 0.0) value -= q * std::log2(q / lambda);
    }
    return value;
  }

  /// Largest violation among flow balance, normalization and nonnegativity.
  double residual(const Occupation& gamma) const {
    check_shape(gamma);
    const std::size_t n = mdp_->num_states();
    std::vector<double> inflow(n, 0.0);
    double total = 0.0, worst = 0.0;
    for (StateIndex s = 0; s < n; ++s) {
      for (double g : gamma[s]) worst = std::max(worst, -g);
      total += visits(gamma, s);
      for (std::size_t a = 0; a < mdp_->num_actions(s); ++a)
        for (const auto& t : mdp_->successors(s, a)) inflow[t.target] += gamma[s][a] * t.prob;
    }
    for (StateIndex s = 0; s < n; ++s) worst = std::max(worst, std::abs(inflow[s] - visits(gamma, s)));
    return std::max(worst, std::abs(total - 1.0));
  }

  /// gamma(s,a) = pi(s) mu(s,a) for the limit distribution of the induced chain.
  Occupation from_policy(const StationaryPolicy& policy) const {
    std::vector<double> pi = limit_distribution(induce_chain(*mdp_, policy));
    Occupation gamma(mdp_->num_states());
    for (StateIndex s = 0; s < mdp_->num_states(); ++s) {
      gamma[s].resize(mdp_->num_actions(s));
      for (std::size_t a = 0; a < gamma[s].size(); ++a) gamma[s][a] = pi[s] * policy.row(s)[a];
    }
    return gamma;
  }

 private:
  void check_shape(const Occupation& gamma) const {
    if (gamma.size() != mdp_->num_states()) throw DimensionMismatch("occupation size");
    for (StateIndex s = 0; s < gamma.size(); ++s)
      if (gamma[s].size() != mdp_->num_actions(s)) throw DimensionMismatch("occupation row size");
  }

  const Mdp* mdp_;
};

struct EntropySolveOptions {
  double tol = 1e-9;                // certified optimality gap
  std::size_t max_iterations = 5000;
  std::size_t inner_iterations = 200;  // Blahut-Arimoto steps per state and improvement
  const StationaryPolicy* start = nullptr;  // default: uniform
};

struct EntropySolution {
  Occupation gamma;
  StationaryPolicy policy;
  double objective = 0.0;  // bits per step
  double gap = 0.0;        // certified upper bound minus objective
  double residual = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

struct GainBias {
  double gain;
  Eigen::VectorXd bias;  // bias(0) = 0
};

// (I - P) h + g 1 = r with h(0) = 0: column 0 of (I - P) replaced by ones, unknowns (g, h_1..).
inline GainBias evaluate_policy(const MarkovChain& mc) {
  const auto n = static_cast<Eigen::Index>(mc.num_states());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd r(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (const auto& t : mc.row(static_cast<StateIndex>(s))) a(s, static_cast<Eigen::Index>(t.target)) -= t.prob;
    r(s) = local_entropy(mc, static_cast<StateIndex>(s));
  }
  a.col(0).setOnes();
  Eigen::VectorXd sol = lu_solve(a, r, "policy evaluation");
  GainBias out{sol(0), sol};
  out.bias(0) = 0.0;
  return out;
}

// c_a = sum_t P(t|s,a) (h(t) - log2 p(t)) for the mixed row p.
inline void action_scores(const Mdp& mdp, StateIndex s, const std::vector<double>& mu, const Eigen::VectorXd& h,
                          std::vector<double>& p, std::vector<double>& c) {
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (const auto& t : mdp.successors(s, a)) p[t.target] = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (const auto& t : mdp.successors(s, a)) p[t.target] += mu[a] * t.prob;
  c.assign(mu.size(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a)
    for (const auto& t : mdp.successors(s, a)) {
      double pt = p[t.target];
      double surprisal = pt > 0.0 ? -std::log2(pt) : 1e12;
      c[a] += t.prob * (h(static_cast<Eigen::Index>(t.target)) + surprisal);
    }
}

}  // namespace detail

inline EntropySolution solve_entropy_program(const Mdp& mdp, const EntropySolveOptions& opt = {}) {
  if (!is_communicating(mdp)) throw NotCommunicating("entropy program requires a communicating MDP");
  const std::size_t n = mdp.num_states();
  StationaryPolicy mu = opt.start ? *opt.start : StationaryPolicy::uniform(mdp);
  mu.validate(mdp);

  std::vector<double> p(n, 0.0), c;
  EntropySolution out;
  for (std::size_t iter = 0;; ++iter) {
    MarkovChain mc = induce_chain(mdp, mu);
    auto gb = detail::evaluate_policy(mc);

    double upper = -std::numeric_limits<double>::infinity();
    for (StateIndex s = 0; s < n; ++s) {
      detail::action_scores(mdp, s, mu.row(s), gb.bias, p, c);
      upper = std::max(upper, *std::max_element(c.begin(), c.end()) - gb.bias(static_cast<Eigen::Index>(s)));
    }
    double gap = upper - gb.gain;
    if (gap <= opt.tol || iter >= opt.max_iterations) {
      out.policy = mu;
      out.gamma = EntropyProgram(mdp).from_policy(mu);
      out.objective = EntropyProgram(mdp).objective(out.gamma);
      out.gap = std::max(0.0, upper - out.objective);
      out.residual = EntropyProgram(mdp).residual(out.gamma);
      out.iterations = iter;
      if (gap > opt.tol) throw NoConvergence(iter, gap, out.residual);
      return out;
    }

    // Improvement: Blahut-Arimoto on each state's action simplex with h fixed.
    for (StateIndex s = 0; s < n; ++s) {
      auto& row = mu.row(s);
      if (row.size() == 1) continue;
      for (std::size_t k = 0; k < opt.inner_iterations; ++k) {
        detail::action_scores(mdp, s, row, gb.bias, p, c);
        double top = *std::max_element(c.begin(), c.end());
        double current = 0.0;
        for (std::size_t a = 0; a < row.size(); ++a) current += row[a] * c[a];
        if (top - current < 1e-13) break;
        double z = 0.0;
        for (std::size_t a = 0; a < row.size(); ++a) {
          row[a] *= std::exp2(c[a] - top);
          z += row[a];
        }
        for (double& v : row) v /= z;
      }
    }
  }
}

}  // namespace entsurv
