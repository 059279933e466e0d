#pragma once

// Text formats. Every file starts with a `format <kind> 1` line; `#` starts a comment;
// tokens are separated by whitespace. Names are non-empty tokens without `#`.
//
// entsurv-mdp:
//   states <name>...                    (one or more lines, in index order)
//   initial <state> <prob>              (optional, repeatable; default: point mass on the first state)
//   action <state> <action> (<successor> <prob>)+
//   target <state>...                   (optional target set B)
// entsurv-policy:
//   policy <state> (<action> <prob>)+   (one line per state; unlisted actions get 0)
// entsurv-targets:
//   target <state>...

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "entsurv/mdp.hpp"

namespace entsurv {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_number(line) {}
  std::size_t line_number;
};

struct MdpDocument {
  Mdp mdp;
  std::vector<StateIndex> targets;
  std::vector<std::string> warnings;
};

namespace detail {

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

inline std::vector<Line> tokenize(std::istream& in) {
  std::vector<Line> out;
  std::string text;
  for (std::size_t number = 1; std::getline(in, text); ++number) {
    if (auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
    std::istringstream ss(text);
    Line line{number, {}};
    for (std::string tok; ss >> tok;) line.tokens.push_back(tok);
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

inline void expect_header(const std::vector<Line>& lines, const std::string& kind) {
  if (lines.empty()) throw ParseError(1, "empty document, expected 'format " + kind + " 1'");
  const auto& first = lines.front();
  if (first.tokens.size() != 3 || first.tokens[0] != "format" || first.tokens[1] != kind || first.tokens[2] != "1")
    throw ParseError(first.number, "expected 'format " + kind + " 1'");
}

/// Strict decimal parse: the whole token must be a finite number.
inline double parse_real(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  if (!tok.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ParseError(line, "malformed number '" + tok + "'");
  return v;
}

inline double parse_probability(const std::string& tok, std::size_t line) {
  double p = parse_real(tok, line);
  if (p < 0.0 || p > 1.0) throw ParseError(line, "probability '" + tok + "' outside [0,1]");
  return p;
}

inline StateIndex lookup(const std::map<std::string, StateIndex>& index, const std::string& name, std::size_t line) {
  auto it = index.find(name);
  if (it == index.end()) throw ParseError(line, "unknown state '" + name + "'");
  return it->second;
}

inline std::map<std::string, StateIndex> name_index(const Mdp& mdp) {
  std::map<std::string, StateIndex> index;
  for (StateIndex s = 0; s < mdp.num_states(); ++s) index[mdp.state_name(s)] = s;
  return index;
}

}  // namespace detail

inline MdpDocument parse_mdp(std::istream& in) {
  auto lines = detail::tokenize(in);
  detail::expect_header(lines, "entsurv-mdp");
  RawMdp raw;
  std::map<std::string, StateIndex> index;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> deferred;  // lines after states are known
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const std::string& kw = line.tokens[0];
    if (kw == "states") {
      if (line.tokens.size() < 2) throw ParseError(line.number, "'states' needs at least one name");
      for (std::size_t j = 1; j < line.tokens.size(); ++j) {
        if (!index.emplace(line.tokens[j], raw.state_names.size()).second)
          throw ParseError(line.number, "duplicate state '" + line.tokens[j] + "'");
        raw.state_names.push_back(line.tokens[j]);
      }
    } else if (kw == "initial" || kw == "action" || kw == "target") {
      deferred.push_back({i, {}});
    } else {
      throw ParseError(line.number, "unknown keyword '" + kw + "'");
    }
  }
  if (raw.state_names.empty()) throw ParseError(lines.front().number, "no states declared");

  MdpDocument doc;
  std::set<StateIndex> targets;
  std::vector<double> initial(raw.state_names.size(), 0.0);
  bool has_initial = false;
  for (const auto& [i, unused] : deferred) {
    const auto& line = lines[i];
    const auto& t = line.tokens;
    if (t[0] == "initial") {
      if (t.size() != 3) throw ParseError(line.number, "expected 'initial <state> <prob>'");
      initial[detail::lookup(index, t[1], line.number)] += detail::parse_probability(t[2], line.number);
      has_initial = true;
    } else if (t[0] == "target") {
      if (t.size() < 2) throw ParseError(line.number, "'target' needs at least one state");
      for (std::size_t j = 1; j < t.size(); ++j) targets.insert(detail::lookup(index, t[j], line.number));
    } else {
      if (t.size() < 5 || (t.size() - 3) % 2 != 0)
        throw ParseError(line.number, "expected 'action <state> <action> (<successor> <prob>)+'");
      RawMdp::Row row{detail::lookup(index, t[1], line.number), t[2], {}, line.number};
      for (std::size_t j = 3; j < t.size(); j += 2)
        row.successors.push_back({detail::lookup(index, t[j], line.number), detail::parse_probability(t[j + 1], line.number)});
      raw.rows.push_back(std::move(row));
    }
  }
  if (has_initial) raw.initial = std::move(initial);
  doc.mdp = validate_mdp(raw, &doc.warnings);
  doc.targets.assign(targets.begin(), targets.end());
  return doc;
}

inline MdpDocument load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_mdp(in);
}

inline void write_mdp(std::ostream& os, const Mdp& mdp, const std::vector<StateIndex>& targets = {}) {
  os << "format entsurv-mdp 1\n";
  for (StateIndex s = 0; s < mdp.num_states(); s += 16) {
    os << "states";
    for (StateIndex j = s; j < std::min(s + 16, mdp.num_states()); ++j) os << ' ' << mdp.state_name(j);
    os << '\n';
  }
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (mdp.initial()[s] > 0.0) os << "initial " << mdp.state_name(s) << ' ' << format_number(mdp.initial()[s]) << '\n';
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a) {
      os << "action " << mdp.state_name(s) << ' ' << mdp.action_name(s, a);
      for (const auto& t : mdp.successors(s, a)) os << ' ' << mdp.state_name(t.target) << ' ' << format_number(t.prob);
      os << '\n';
    }
  if (!targets.empty()) {
    os << "target";
    for (StateIndex b : targets) os << ' ' << mdp.state_name(b);
    os << '\n';
  }
}

inline std::vector<StateIndex> parse_targets(std::istream& in, const Mdp& mdp) {
  auto lines = detail::tokenize(in);
  detail::expect_header(lines, "entsurv-targets");
  auto index = detail::name_index(mdp);
  std::set<StateIndex> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& t = lines[i].tokens;
    if (t[0] != "target") throw ParseError(lines[i].number, "unknown keyword '" + t[0] + "'");
    if (t.size() < 2) throw ParseError(lines[i].number, "'target' needs at least one state");
    for (std::size_t j = 1; j < t.size(); ++j) out.insert(detail::lookup(index, t[j], lines[i].number));
  }
  return {out.begin(), out.end()};
}

inline void write_targets(std::ostream& os, const Mdp& mdp, const std::vector<StateIndex>& targets) {
  os << "format entsurv-targets 1\ntarget";
  for (StateIndex b : targets) os << ' ' << mdp.state_name(b);
  os << '\n';
}

/// Rows are validated against `mdp`; every state must appear exactly once.
inline StationaryPolicy parse_policy(std::istream& in, const Mdp& mdp) {
  auto lines = detail::tokenize(in);
  detail::expect_header(lines, "entsurv-policy");
  auto index = detail::name_index(mdp);
  std::vector<std::vector<double>> rows(mdp.num_states());
  std::vector<bool> seen(mdp.num_states(), false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto& t = line.tokens;
    if (t[0] != "policy") throw ParseError(line.number, "unknown keyword '" + t[0] + "'");
    if (t.size() < 4 || (t.size() - 2) % 2 != 0) throw ParseError(line.number, "expected 'policy <state> (<action> <prob>)+'");
    StateIndex s = detail::lookup(index, t[1], line.number);
    if (seen[s]) throw ParseError(line.number, "duplicate policy row for '" + t[1] + "'");
    seen[s] = true;
    rows[s].assign(mdp.num_actions(s), 0.0);
    for (std::size_t j = 2; j < t.size(); j += 2) {
      auto a = mdp.find_action(s, t[j]);
      if (!a) throw ParseError(line.number, "state '" + t[1] + "' has no action '" + t[j] + "'");
      rows[s][*a] += detail::parse_probability(t[j + 1], line.number);
    }
    double sum = 0.0;
    for (double p : rows[s]) sum += p;
    if (std::abs(sum - 1.0) > kStochasticTol)
      throw ParseError(line.number, "policy row of '" + t[1] + "' sums to " + format_number(sum));
  }
  for (StateIndex s = 0; s < mdp.num_states(); ++s)
    if (!seen[s]) throw ParseError(lines.back().number, "no policy row for state '" + mdp.state_name(s) + "'");
  StationaryPolicy policy(std::move(rows));
  policy.validate(mdp);
  return policy;
}

inline void write_policy(std::ostream& os, const Mdp& mdp, const StationaryPolicy& policy) {
  os << "format entsurv-policy 1\n";
  for (StateIndex s = 0; s < mdp.num_states(); ++s) {
    os << "policy " << mdp.state_name(s);
    for (std::size_t a = 0; a < mdp.num_actions(s); ++a)
      os << ' ' << mdp.action_name(s, a) << ' ' << format_number(policy.row(s)[a]);
    os << '\n';
  }
}

}  // namespace entsurv
