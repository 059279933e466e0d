#include <gtest/gtest.h>

#include <random>
#include <set>

#include "entsurv/entsurv.hpp"
#include "test_support.hpp"

using namespace entsurv;
using testsupport::five_state;

namespace {

using States = std::vector<StateIndex>;

// States 0..2 absorbing, 3 and 4 transient feeding them.
Mdp absorbing_fan() {
  RawMdp raw;
  raw.state_names = {"a", "b", "c", "t", "u"};
  for (StateIndex s = 0; s < 3; ++s) raw.rows.push_back({s, "stay", {{s, 1.0}}, 0});
  raw.rows.push_back({3, "x", {{0, 0.5}, {1, 0.5}}, 0});
  raw.rows.push_back({4, "x", {{2, 1.0}}, 0});
  raw.rows.push_back({4, "y", {{3, 1.0}}, 0});
  return validate_mdp(raw);
}

}  // namespace

TEST(Scc, SinksFirstAndComplete) {
  Digraph g{{1}, {2}, {0, 3}, {4}, {3}};
  auto scc = strongly_connected_components(g);
  ASSERT_EQ(scc.components.size(), 2u);
  EXPECT_EQ(scc.component[3], scc.component[4]);
  EXPECT_EQ(scc.component[0], scc.component[2]);
  EXPECT_EQ(scc.components.front().size(), 2u);  // {3,4} is a sink
}

TEST(Scc, DeepPathDoesNotOverflow) {
  const std::size_t n = 200000;
  Digraph g(n);
  for (std::size_t i = 0; i + 1 < n; ++i) g[i].push_back(i + 1);
  g[n - 1].push_back(0);
  auto scc = strongly_connected_components(g);
  EXPECT_EQ(scc.components.size(), 1u);
}

TEST(Reach, FiveState) {
  Mdp m = five_state();
  EXPECT_EQ(reach_set(m, 3), (States{0, 1, 2, 3, 4}));
  EXPECT_EQ(reach_set(m, 1), (States{1}));
}

TEST(Mec, FiveState) {
  Mdp m = five_state();
  auto mecs = mec_decomposition(m);
  ASSERT_EQ(mecs.size(), 3u);
  EXPECT_EQ(mecs[0].states, (States{1}));
  EXPECT_EQ(mecs[0].actions[0], (std::vector<std::size_t>{0}));
  EXPECT_EQ(mecs[1].states, (States{2}));
  EXPECT_EQ(mecs[1].actions[0], (std::vector<std::size_t>{2}));
  EXPECT_EQ(mecs[2].states, (States{3, 4}));
  EXPECT_EQ(mecs[2].actions[0], (std::vector<std::size_t>{2}));
  // Both of state 5's actions stay inside {4,5}.
  EXPECT_EQ(mecs[2].actions[1], (std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(is_communicating(m));
}

TEST(Mec, CompleteGraphIsOneMec) {
  Mdp m = testsupport::complete_mdp(4);
  auto mecs = mec_decomposition(m);
  ASSERT_EQ(mecs.size(), 1u);
  EXPECT_EQ(mecs[0].states.size(), 4u);
  EXPECT_TRUE(is_communicating(m));
}

TEST(Mec, OfSubMdp) {
  Mdp m = five_state();
  std::vector<std::vector<std::size_t>> amap(5);
  amap[3] = {2};
  amap[4] = {0};
  auto mecs = mec_decomposition(restrict(m, {3, 4}, amap));
  ASSERT_EQ(mecs.size(), 1u);
  EXPECT_EQ(mecs[0].actions[1], (std::vector<std::size_t>{0}));
}

// Each MEC is closed, strongly connected under its actions, and no larger EC exists:
// checked against brute force over all state subsets for small random MDPs.
TEST(Mec, MatchesBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Mdp m = testsupport::random_mdp(rng, 1 + trial % 6, 3, 2);
    const std::size_t n = m.num_states();
    auto mecs = mec_decomposition(m);
    // Brute force: a state is in some EC iff it lies in a closed, strongly connected subset.
    std::vector<bool> in_ec(n, false);
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      std::vector<std::vector<std::size_t>> acts(n);
      bool empty = false;
      for (StateIndex s = 0; s < n; ++s) {
        if (!(mask >> s & 1u)) continue;
        for (std::size_t a = 0; a < m.num_actions(s); ++a) {
          bool closed = true;
          for (const auto& t : m.successors(s, a)) closed = closed && (mask >> t.target & 1u);
          if (closed) acts[s].push_back(a);
        }
        empty = empty || acts[s].empty();
      }
      if (empty) continue;
      auto r = testsupport::closure(n, [&](std::size_t i, std::size_t j) {
        if (!(mask >> i & 1u)) return false;
        for (std::size_t a : acts[i])
          for (const auto& t : m.successors(i, a))
            if (t.target == j) return true;
        return false;
      });
      bool strongly = true;
      for (StateIndex i = 0; i < n; ++i)
        for (StateIndex j = 0; j < n; ++j)
          if ((mask >> i & 1u) && (mask >> j & 1u) && !r[i][j]) strongly = false;
      if (!strongly) continue;
      for (StateIndex s = 0; s < n; ++s)
        if (mask >> s & 1u) in_ec[s] = true;
    }
    std::vector<bool> covered(n, false);
    for (const auto& mec : mecs)
      for (StateIndex s : mec.states) {
        EXPECT_FALSE(covered[s]);
        covered[s] = true;
      }
    EXPECT_EQ(covered, in_ec) << "trial " << trial;
  }
}

TEST(Levels, FiveState) {
  Mdp m = five_state();
  auto lv = classify_levels(m);
  ASSERT_EQ(lv.max_level, 2u);
  EXPECT_EQ(lv.mec_levels[0], (States{1}));
  EXPECT_EQ(lv.transient_levels[0], (States{0}));
  EXPECT_EQ(lv.mec_levels[1], (States{2}));
  EXPECT_TRUE(lv.transient_levels[1].empty());
  EXPECT_EQ(lv.mec_levels[2], (States{3, 4}));
  EXPECT_TRUE(lv.transient_levels[2].empty());
}

TEST(Levels, CommunicatingIsLevelZero) {
  auto lv = classify_levels(testsupport::complete_mdp(3));
  EXPECT_EQ(lv.max_level, 0u);
  EXPECT_EQ(lv.mec_levels[0].size(), 3u);
  EXPECT_TRUE(lv.transient_levels[0].empty());
}

TEST(Levels, AbsorbingFan) {
  auto lv = classify_levels(absorbing_fan());
  EXPECT_EQ(lv.max_level, 0u);
  EXPECT_EQ(lv.mec_levels[0], (States{0, 1, 2}));
  EXPECT_EQ(lv.transient_levels[0], (States{3, 4}));
}

// Invariants checked from reach sets directly: a MEC is level 0 iff it reaches no other MEC
// state; level k MECs reach some level k-1 MEC and nothing of level >= k outside themselves
// (MECs reaching each other count as one); transient states land in the smallest level
// covering every MEC they reach.
TEST(Levels, InvariantsOnRandomMdps) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    Mdp m = testsupport::random_mdp(rng, 2 + trial % 9, 3, 2);
    auto lv = classify_levels(m);
    const std::size_t n = m.num_states();
    std::vector<long> level(n, -1);
    std::vector<bool> is_mec(n, false);
    for (std::size_t k = 0; k <= lv.max_level; ++k) {
      for (StateIndex s : lv.mec_levels[k]) level[s] = static_cast<long>(k), is_mec[s] = true;
      for (StateIndex s : lv.transient_levels[k]) {
        ASSERT_EQ(level[s], -1);
        level[s] = static_cast<long>(k);
      }
    }
    for (StateIndex s = 0; s < n; ++s) ASSERT_GE(level[s], 0) << "state " << s << " unassigned";
    for (StateIndex s = 0; s < n; ++s) {
      long reach_max = -1;
      auto from_s = reach_set(m, s);
      for (StateIndex t : from_s) {
        if (!is_mec[t]) continue;
        if (lv.mec_of_state[t] == lv.mec_of_state[s]) continue;
        // MECs that reach each other through transient states share a level.
        auto back = reach_set(m, t);
        if (is_mec[s] && std::binary_search(back.begin(), back.end(), s)) {
          EXPECT_EQ(level[t], level[s]);
          continue;
        }
        reach_max = std::max(reach_max, level[t]);
      }
      if (is_mec[s]) {
        EXPECT_EQ(level[s], reach_max + 1) << "mec state " << s;
      } else {
        EXPECT_EQ(level[s], std::max(0L, reach_max)) << "transient state " << s;
      }
    }
    if (testsupport::oracle_communicating(m)) {
      EXPECT_EQ(lv.max_level, 0u);
    }
  }
}

TEST(Winning, FiveStateTargetTwoIsEverything) {
  Mdp m = five_state();
  auto mecs = mec_decomposition(m);
  mark_accepting(mecs, {1});
  std::vector<Mec> amecs;
  for (auto& x : mecs)
    if (x.accepting) amecs.push_back(x);
  ASSERT_EQ(amecs.size(), 1u);
  auto w = almost_sure_winning(m, amecs);
  EXPECT_EQ(w.states, (States{0, 1, 2, 3, 4}));
}

TEST(Winning, FiveStateTargetFive) {
  Mdp m = five_state();
  auto mecs = mec_decomposition(m);
  mark_accepting(mecs, {4});
  std::vector<Mec> amecs;
  for (auto& x : mecs)
    if (x.accepting) amecs.push_back(x);
  auto w = almost_sure_winning(m, amecs);
  EXPECT_EQ(w.states, (States{3, 4}));
  EXPECT_EQ(w.allowed[3], (std::vector<std::size_t>{2}));
}

// Winning region equals {s : max Pr(reach AMEC) = 1} by value iteration, and the allowed
// actions keep the region closed.
TEST(Winning, MatchesValueIteration) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    Mdp m = testsupport::random_mdp(rng, 2 + trial % 8, 3, 3);
    const std::size_t n = m.num_states();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<StateIndex> b{pick(rng)};
    if (trial % 2) b.insert(pick(rng));
    auto mecs = mec_decomposition(m);
    mark_accepting(mecs, {b.begin(), b.end()});
    std::vector<Mec> amecs;
    std::vector<bool> goal(n, false);
    for (auto& x : mecs)
      if (x.accepting) {
        amecs.push_back(x);
        for (StateIndex s : x.states) goal[s] = true;
      }
    auto w = almost_sure_winning(m, amecs);
    auto v = testsupport::max_reach_probability(m, goal);
    for (StateIndex s = 0; s < n; ++s) {
      EXPECT_EQ(w.contains(s), v[s] > 1.0 - 1e-9) << "trial " << trial << " state " << s << " v " << v[s];
      if (!w.contains(s)) continue;
      ASSERT_FALSE(w.allowed[s].empty());
      for (std::size_t a : w.allowed[s])
        for (const auto& t : m.successors(s, a)) EXPECT_TRUE(w.contains(t.target));
    }
  }
}

TEST(Dot, MentionsEveryMec) {
  std::string dot = level_graph_dot(five_state(), classify_levels(five_state()));
  EXPECT_NE(dot.find("digraph"), std::string::npos);
  EXPECT_NE(dot.find("L2"), std::string::npos);
}
