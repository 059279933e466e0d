// Acceptance checks 1..11. Prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion...]   (default: all). Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "entsurv/entsurv.hpp"
#include "test_support.hpp"

using namespace entsurv;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Five-state example level decomposition, exact, under 1 ms.
Outcome five_state_levels() {
  Mdp m = ts::five_state();
  using S = std::vector<StateIndex>;
  std::vector<double> times;
  LevelDecomposition lv;
  for (int i = 0; i < 101; ++i) {
    auto t0 = Clock::now();
    lv = classify_levels(m, mec_decomposition(m));
    times.push_back(seconds_since(t0));
  }
  std::nth_element(times.begin(), times.begin() + 50, times.end());
  double median_ms = times[50] * 1e3;
  bool exact = lv.max_level == 2 && lv.mec_levels[0] == S{1} && lv.transient_levels[0] == S{0} &&
               lv.mec_levels[1] == S{2} && lv.transient_levels[1].empty() && lv.mec_levels[2] == S{3, 4} &&
               lv.transient_levels[2].empty();
  return {exact && median_ms < 1.0,
          fmt("L0={2} T0={1} L1={3} T1={} L2={4,5} T2={} level=2 %s; median %.4f ms", exact ? "match" : "MISMATCH",
              median_ms)};
}

// 2. Workspace counts and MEC structure, under 1 s.
Outcome workspace_structure() {
  auto t0 = Clock::now();
  Workspace ws = build_workspace();
  auto mecs = mec_decomposition(ws.mdp);
  double secs = seconds_since(t0);
  bool merged = false;
  for (const auto& mec : mecs) {
    std::set<int> regions;
    for (StateIndex s : mec.states) regions.insert(ws.cells[s].region);
    if (regions.count(3) && regions.count(5)) merged = true;
  }
  bool ok = ws.mdp.num_states() == 310 && ws.mdp.num_edges() == 1379 && mecs.size() == 4 && merged && secs < 1.0;
  return {ok, fmt("states %zu edges %zu mecs %zu regions3+5 merged %s; %.3f s", ws.mdp.num_states(),
                  ws.mdp.num_edges(), mecs.size(), merged ? "yes" : "no", secs)};
}

const ObservationOptions kProbeModel{ProbeModel::Sequential, ProbeSupport::Action, true};

struct CaseRun {
  Workspace ws;
  SynthesisResult r;
  std::vector<double> pi;
  double oa = 0.0;
  double seconds = 0.0;
  std::size_t amecs = 0;
};

CaseRun run_case(bool green) {
  CaseRun c;
  auto t0 = Clock::now();
  c.ws = build_workspace();
  c.r = synthesize({&c.ws.mdp, green ? c.ws.green : c.ws.blue});
  c.seconds = seconds_since(t0);
  c.pi = limit_distribution(induce_chain(c.ws.mdp, c.r.policy));
  c.oa = observation_cost(c.ws.mdp, c.r.policy, kProbeModel);
  for (const auto& m : c.r.mecs) c.amecs += m.accepting ? 1 : 0;
  return c;
}

// 3. Blue tasks: two AMECs, limit distribution on the Regions 3+5 MEC, O_a = 2.56 +- 0.05.
Outcome blue_case() {
  CaseRun c = run_case(false);
  // The Regions 3+5 MEC includes the two corridor cells joining them.
  std::vector<bool> allowed(c.ws.mdp.num_states(), false);
  for (const auto& mec : mec_decomposition(c.ws.mdp)) {
    bool r3 = false, r5 = false;
    for (StateIndex s : mec.states) r3 |= c.ws.cells[s].region == 3, r5 |= c.ws.cells[s].region == 5;
    if (r3 && r5)
      for (StateIndex s : mec.states) allowed[s] = true;
  }
  double outside = 0.0;
  for (StateIndex s = 0; s < c.pi.size(); ++s)
    if (!allowed[s]) outside += c.pi[s];
  bool ok = c.amecs == 2 && outside < 1e-12 && std::abs(c.oa - 2.56) <= 0.05 && c.seconds <= 1800.0;
  return {ok, fmt("amecs %zu mass outside Regions 3+5 %.3g O_a %.4f (target 2.56 +- 0.05) rate %.6f; %.2f s", c.amecs,
                  outside, c.oa, c.r.global_rate, c.seconds)};
}

// 4. Green task: one AMEC, O_a = 2.55 +- 0.05, action spread < 0.02 at Region 4's centre
//    and larger at its corners.
Outcome green_case() {
  CaseRun c = run_case(true);
  const Region& r4 = workspace_regions()[3];
  auto spread_at = [&](int lr, int lc) { return action_spread(c.r.policy, *c.ws.state_at(r4.row0 + lr, r4.col0 + lc)); };
  double centre = 0.0;
  for (int lr : {3, 4})
    for (int lc : {3, 4}) centre = std::max(centre, spread_at(lr, lc));
  double corner = 1.0;
  for (int lr : {0, 7})
    for (int lc : {0, 7}) corner = std::min(corner, spread_at(lr, lc));
  double in_r4 = 0.0;
  for (StateIndex s : c.ws.region_states(4)) in_r4 += c.pi[s];
  bool metric = c.amecs == 1 && std::abs(c.oa - 2.55) <= 0.05 && in_r4 > 1.0 - 1e-12;
  bool spread = centre < 0.02 && corner > centre;
  return {metric && spread,
          fmt("amecs %zu mass in Region 4 %.6f O_a %.4f (target 2.55 +- 0.05); centre spread %.4f (need < 0.02) "
              "corner spread %.4f; %.2f s",
              c.amecs, in_r4, c.oa, centre, corner, c.seconds)};
}

// 5. Complete n-state MDPs: log2 n and uniform policy.
Outcome complete_graphs() {
  double worst_rate = 0.0, worst_policy = 0.0;
  for (std::size_t n : {2u, 3u, 4u, 8u}) {
    Mdp m = ts::complete_mdp(n);
    auto sol = max_entropy_rate_policy(m);
    worst_rate = std::max(worst_rate, std::abs(sol.entropy_rate_value - std::log2(static_cast<double>(n))));
    for (StateIndex s = 0; s < n; ++s)
      for (double p : sol.policy.row(s)) worst_policy = std::max(worst_policy, std::abs(p - 1.0 / static_cast<double>(n)));
  }
  return {worst_rate < 1e-4 && worst_policy < 1e-3,
          fmt("max |rate - log2 n| %.3g (< 1e-4), max |mu - 1/n| %.3g (< 1e-3)", worst_rate, worst_policy)};
}

// 6. 50 random communicating MDPs against a 0.01-grid oracle, within 5e-3, under 2 min.
Outcome unconstrained_vs_grid() {
  std::mt19937_64 rng(6006);
  auto t0 = Clock::now();
  double worst = 0.0, grid_ahead = -1.0;
  for (int i = 0; i < 50; ++i) {
    std::size_t n = 2 + static_cast<std::size_t>(i % 2);
    Mdp m = ts::random_communicating_mdp(rng, n, 2, 3);
    double solver = max_entropy_rate_policy(m).entropy_rate_value;
    double oracle = ts::grid_oracle_unconstrained(m, 0.01);
    worst = std::max(worst, std::abs(solver - oracle));
    grid_ahead = std::max(grid_ahead, oracle - solver);
  }
  double secs = seconds_since(t0);
  return {worst <= 5e-3 && secs < 120.0,
          fmt("max |solver - grid| %.3g (<= 5e-3), grid above solver by at most %.3g; %.1f s", worst, grid_ahead, secs)};
}

// 7. 30 random feasible instances against a 0.02-grid brute force over stationary policies.
Outcome constrained_vs_bruteforce() {
  std::mt19937_64 rng(7007);
  auto t0 = Clock::now();
  double worst = 0.0;
  int done = 0, skipped = 0;
  while (done < 30) {
    std::size_t n = 2 + static_cast<std::size_t>(rng() % 3);
    Mdp m = ts::random_mdp(rng, n, 2, 2);
    std::set<StateIndex> bset;
    std::size_t k = 1 + rng() % 2;
    while (bset.size() < k) bset.insert(static_cast<StateIndex>(rng() % n));
    std::vector<StateIndex> b(bset.begin(), bset.end());
    SynthesisResult r;
    try {
      r = synthesize({&m, b});
    } catch (const NoFeasiblePolicy&) {
      ++skipped;
      continue;
    }
    double oracle = ts::grid_oracle_constrained(m, b, 0.02);
    double diff = oracle < 0.0 ? 1.0 : std::abs(r.global_rate - oracle);
    if (diff > worst) worst = diff;
    ++done;
  }
  double secs = seconds_since(t0);
  return {worst <= 1e-2 && secs < 600.0,
          fmt("30 instances (%d infeasible skipped), max |synth - brute force| %.3g (<= 1e-2); %.1f s", skipped, worst,
              secs)};
}

// 8. Optimal policy of a communicating MDP induces an irreducible chain on S.
Outcome irreducible_optimum() {
  std::mt19937_64 rng(8008);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    Mdp m = ts::random_communicating_mdp(rng, 2 + static_cast<std::size_t>(i % 9), 3, 3);
    auto sol = max_entropy_rate_policy(m);
    auto cs = chain_structure(induce_chain(m, sol.policy));
    if (cs.recurrent_classes.size() != 1 || cs.recurrent_classes[0].size() != m.num_states()) ++bad;
  }
  return {bad == 0, fmt("%d of 100 optimal chains reducible", bad)};
}

// 9. Synthesized policies satisfy the task; window monitor passes at horizon 1e5.
Outcome soundness() {
  std::mt19937_64 rng(9009);
  const std::size_t horizon = 100000, paths = 10, window = 1000;
  int done = 0, unsound = 0;
  double passed = 0.0;
  auto t0 = Clock::now();
  while (done < 100) {
    std::size_t n = 2 + static_cast<std::size_t>(rng() % 5);
    Mdp m = ts::random_mdp(rng, n, 3, 3);
    std::vector<StateIndex> b{static_cast<StateIndex>(rng() % n)};
    SynthesisResult r;
    try {
      r = synthesize({&m, b});
    } catch (const NoFeasiblePolicy&) {
      continue;
    }
    ++done;
    std::vector<std::vector<double>> rows;
    for (StateIndex s = 0; s < m.num_states(); ++s) rows.push_back(r.policy.row(s));
    if (!ts::oracle_surveils(ts::dense_chain(m, rows), ts::initial_row(m), b)) ++unsound;
    auto batch = sample_paths(m, r.policy, horizon, paths, 1000 + static_cast<std::uint64_t>(done));
    passed += surveillance_monitor(batch, b, window) * static_cast<double>(paths);
  }
  double fraction = passed / (100.0 * paths);
  return {unsound == 0 && fraction >= 0.99,
          fmt("unsound %d of 100; window %zu pass fraction %.4f (>= 0.99); %.1f s", unsound, window, fraction,
              seconds_since(t0))};
}

// 10. Limit distribution: fixed point, Cesaro agreement of the entropy rate, beta sums to one.
Outcome limit_distribution_checks() {
  std::mt19937_64 rng(1010);
  double worst_fixed = 0.0, worst_rate = 0.0, worst_beta = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::size_t n = 1 + static_cast<std::size_t>(i % 8);
    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    for (std::size_t s = 0; s < n; ++s)
      for (const auto& t : ts::random_row(rng, n, 3)) p[s][t.target] = t.prob;
    std::vector<double> init(n, 0.0);
    init[rng() % n] = 1.0;
    auto mc = MarkovChain::from_dense(p, init);
    auto cs = chain_structure(mc);
    auto pi = limit_distribution(cs, n);
    double beta = 0.0;
    for (double x : cs.reach_weights) beta += x;
    worst_beta = std::max(worst_beta, std::abs(beta - 1.0));
    for (std::size_t j = 0; j < n; ++j) {
      double v = -pi[j];
      for (std::size_t s = 0; s < n; ++s) v += pi[s] * p[s][j];
      worst_fixed = std::max(worst_fixed, std::abs(v));
    }
    // Cesaro average of pi0 P^t over 1e5 steps.
    std::vector<double> x = init, next(n), avg(n, 0.0);
    const int steps = 100000;
    for (int t = 0; t < steps; ++t) {
      for (std::size_t j = 0; j < n; ++j) avg[j] += x[j];
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t s = 0; s < n; ++s)
        for (std::size_t j = 0; j < n; ++j) next[j] += x[s] * p[s][j];
      std::swap(x, next);
    }
    double cesaro = 0.0;
    for (std::size_t s = 0; s < n; ++s) cesaro += avg[s] / steps * local_entropy(mc, s);
    worst_rate = std::max(worst_rate, std::abs(cesaro - entropy_rate(mc, pi)));
  }
  return {worst_fixed < 1e-8 && worst_rate < 1e-3 && worst_beta < 1e-9,
          fmt("max |pi P - pi| %.3g (< 1e-8), max |rate - Cesaro| %.3g (< 1e-3), max |sum beta - 1| %.3g (< 1e-9)",
              worst_fixed, worst_rate, worst_beta)};
}

// 11. Concavity of the entropy-program objective on 1000 feasible pairs.
Outcome concavity() {
  std::mt19937_64 rng(1111);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Mdp m = ts::random_communicating_mdp(rng, 2 + static_cast<std::size_t>(i % 6), 3, 3);
    EntropyProgram prog(m);
    auto random_gamma = [&] {
      std::vector<std::vector<double>> rows(m.num_states());
      for (StateIndex s = 0; s < m.num_states(); ++s) {
        double z = 0.0;
        for (std::size_t a = 0; a < m.num_actions(s); ++a) z += rows[s].emplace_back(u(rng) < 0.3 ? 0.0 : u(rng));
        if (z == 0.0) rows[s][0] = z = 1.0;
        for (double& v : rows[s]) v /= z;
      }
      return prog.from_policy(StationaryPolicy(std::move(rows)));
    };
    auto g1 = random_gamma(), g2 = random_gamma();
    double theta = u(rng);
    Occupation mix = g1;
    for (StateIndex s = 0; s < m.num_states(); ++s)
      for (std::size_t a = 0; a < mix[s].size(); ++a) mix[s][a] = theta * g1[s][a] + (1 - theta) * g2[s][a];
    double deficit = theta * prog.objective(g1) + (1 - theta) * prog.objective(g2) - prog.objective(mix);
    worst = std::max(worst, deficit);
  }
  return {worst <= 1e-9, fmt("max chord excess %.3g (<= 1e-9)", worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"five-state example levels", five_state_levels},
      {"workspace structure", workspace_structure},
      {"blue tasks", blue_case},
      {"green task", green_case},
      {"complete graphs", complete_graphs},
      {"unconstrained vs grid oracle", unconstrained_vs_grid},
      {"constrained vs brute force", constrained_vs_bruteforce},
      {"irreducible optimum", irreducible_optimum},
      {"surveillance soundness", soundness},
      {"limit distribution", limit_distribution_checks},
      {"concavity", concavity},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    long k = std::strtol(argv[i], nullptr, 10);
    if (k < 1 || k > static_cast<long>(criteria.size())) {
      std::fprintf(stderr, "usage: %s [1..%zu]...\n", argv[0], criteria.size());
      return 64;
    }
    selected.push_back(static_cast<std::size_t>(k));
  }
  if (selected.empty())
    for (std::size_t k = 1; k <= criteria.size(); ++k) selected.push_back(k);

  int failures = 0;
  for (std::size_t k : selected) {
    Outcome o;
    try {
      o = criteria[k - 1].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s: %s\n", k, o.pass ? "PASS" : "FAIL", criteria[k - 1].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
