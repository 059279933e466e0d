#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "entsurv/entsurv.hpp"
#include "test_support.hpp"

using namespace entsurv;

namespace {

MdpDocument parse(const std::string& text) {
  std::istringstream in(text);
  return parse_mdp(in);
}

}  // namespace

TEST(ParseMdp, Minimal) {
  auto doc = parse(
      "format entsurv-mdp 1\n"
      "states a b   # two states\n"
      "initial b 1\n"
      "action a go b 1\n"
      "action b go a 0.25 b 0.75\n"
      "target b\n");
  EXPECT_EQ(doc.mdp.num_states(), 2u);
  EXPECT_DOUBLE_EQ(doc.mdp.initial()[1], 1.0);
  EXPECT_EQ(doc.targets, (std::vector<StateIndex>{1}));
  EXPECT_NEAR(doc.mdp.successors(1, 0)[0].prob, 0.25, 1e-15);
}

TEST(ParseMdp, Errors) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line_number;
    }
    return 0;
  };
  EXPECT_EQ(line_of(""), 1u);
  EXPECT_EQ(line_of("format entsurv-mdp 2\n"), 1u);
  EXPECT_EQ(line_of("format entsurv-mdp 1\nstates a\naction a go a nan\n"), 3u);
  EXPECT_EQ(line_of("format entsurv-mdp 1\nstates a\naction a go a 1x\n"), 3u);
  EXPECT_EQ(line_of("format entsurv-mdp 1\nstates a\naction a go b 1\n"), 3u);
  EXPECT_EQ(line_of("format entsurv-mdp 1\nstates a a\n"), 2u);
  EXPECT_EQ(line_of("format entsurv-mdp 1\nstates a\nbogus\n"), 3u);
  EXPECT_EQ(line_of("format entsurv-mdp 1\nstates a\naction a go a 1.5\n"), 3u);
  EXPECT_THROW(parse("format entsurv-mdp 1\nstates a b\naction a go b 0.9\naction b go a 1\n"), ValidationError);
}

TEST(RoundTrip, MdpAndPolicy) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    Mdp m = testsupport::random_mdp(rng, 1 + trial % 7, 3, 4);
    std::ostringstream os;
    write_mdp(os, m, {0});
    auto doc = parse(os.str());
    ASSERT_EQ(doc.mdp.num_states(), m.num_states());
    EXPECT_EQ(doc.targets, (std::vector<StateIndex>{0}));
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      EXPECT_NEAR(doc.mdp.initial()[s], m.initial()[s], 1e-11);
      ASSERT_EQ(doc.mdp.num_actions(s), m.num_actions(s));
      for (std::size_t a = 0; a < m.num_actions(s); ++a) {
        auto x = m.successors(s, a), y = doc.mdp.successors(s, a);
        ASSERT_EQ(x.size(), y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          EXPECT_EQ(x[i].target, y[i].target);
          EXPECT_NEAR(x[i].prob, y[i].prob, 1e-11);
        }
      }
    }

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> rows(m.num_states());
    for (StateIndex s = 0; s < m.num_states(); ++s) {
      double z = 0.0;
      for (std::size_t a = 0; a < m.num_actions(s); ++a) z += rows[s].emplace_back(u(rng));
      for (double& v : rows[s]) v /= z;
    }
    StationaryPolicy p(rows);
    std::ostringstream ps;
    write_policy(ps, m, p);
    std::istringstream pin(ps.str());
    auto back = parse_policy(pin, m);
    for (StateIndex s = 0; s < m.num_states(); ++s)
      for (std::size_t a = 0; a < m.num_actions(s); ++a) EXPECT_NEAR(back.row(s)[a], p.row(s)[a], 1e-9);
  }
}

TEST(ParsePolicy, Errors) {
  Mdp m = testsupport::complete_mdp(2);
  auto bad = [&](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(parse_policy(in, m), ParseError) << text;
  };
  bad("format entsurv-policy 1\npolicy s0 to0 1\n");                       // s1 missing
  bad("format entsurv-policy 1\npolicy s0 to0 0.5\npolicy s1 to1 1\n");    // row sum
  bad("format entsurv-policy 1\npolicy s0 to9 1\npolicy s1 to1 1\n");      // unknown action
  bad("format entsurv-policy 1\npolicy s0 to0 1\npolicy s0 to0 1\npolicy s1 to1 1\n");
}

TEST(Targets, RoundTrip) {
  Mdp m = testsupport::five_state();
  std::ostringstream os;
  write_targets(os, m, {1, 4});
  std::istringstream in(os.str());
  EXPECT_EQ(parse_targets(in, m), (std::vector<StateIndex>{1, 4}));
  std::istringstream bad("format entsurv-targets 1\ntarget 9\n");
  EXPECT_THROW(parse_targets(bad, m), ParseError);
}

TEST(Report, FiveStateAnalysis) {
  Mdp m = testsupport::five_state();
  std::ostringstream os;
  write_analysis(os, m, {1});
  const std::string text = os.str();
  EXPECT_NE(text.find("L0 2\n"), std::string::npos) << text;
  EXPECT_NE(text.find("T0 1\n"), std::string::npos);
  EXPECT_NE(text.find("L1 3\n"), std::string::npos);
  EXPECT_NE(text.find("L2 4 5\n"), std::string::npos);
  EXPECT_NE(text.find("levels 2\n"), std::string::npos);
  EXPECT_NE(text.find("winning 1 2 3 4 5\n"), std::string::npos);
}
