// entsurv: structural analysis, entropy-rate synthesis, simulation and the grid-world case study.
//
// Exit codes: 0 ok, 2 input error, 3 infeasible, 4 solver failure.
// ENTSURV_LOG=quiet|info|debug controls stderr chatter (default info).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "entsurv/entsurv.hpp"

namespace {

using namespace entsurv;

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  const char* env = std::getenv("ENTSURV_LOG");
  if (!env) return LogLevel::Info;
  std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "entsurv: " << msg << "\n";
}

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

MdpDocument load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  MdpDocument doc = parse_mdp(in);
  for (const auto& w : doc.warnings) log(LogLevel::Info, "warning: " + w);
  return doc;
}

std::vector<StateIndex> resolve_targets(const MdpDocument& doc, const std::string& target_file) {
  if (target_file.empty()) return doc.targets;
  std::ifstream in(target_file);
  if (!in) throw InputError("cannot open '" + target_file + "'");
  return parse_targets(in, doc.mdp);
}

ObservationOptions observation_options(const std::string& model, const std::string& support, bool min_one) {
  ObservationOptions o;
  o.model = model == "sequential" ? ProbeModel::Sequential : ProbeModel::Huffman;
  o.support = support == "action" ? ProbeSupport::Action : ProbeSupport::Successor;
  o.min_probes_one = min_one;
  return o;
}

int cmd_analyze(const std::string& input, const std::string& target_file, const std::string& dot) {
  MdpDocument doc = load_document(input);
  auto targets = resolve_targets(doc, target_file);
  write_analysis(std::cout, doc.mdp, targets);
  if (!dot.empty()) {
    auto mecs = mec_decomposition(doc.mdp);
    mark_accepting(mecs, targets);
    open_out(dot) << level_graph_dot(doc.mdp, classify_levels(doc.mdp, mecs));
  }
  return 0;
}

void write_unconstrained(std::ostream& os, const Mdp& mdp, const CommunicatingSolution& sol,
                         const ObservationReport& obs) {
  os << "format entsurv-result 1\n";
  os << "mode unconstrained\n";
  os << "global_rate " << format_number(sol.entropy_rate_value) << "\n";
  os << "chain_rate " << format_number(entropy_rate(induce_chain(mdp, sol.policy))) << "\n";
  write_observation(os, obs);
  os << "iterations " << sol.iterations << " gap " << format_number(sol.gap) << "\n";
}

int cmd_synthesize(const std::string& input, const std::string& target_file, bool unconstrained,
                   const ObservationOptions& obs_opt, const std::string& out) {
  MdpDocument doc = load_document(input);
  const Mdp& mdp = doc.mdp;
  std::ostringstream result;
  StationaryPolicy policy;
  if (unconstrained) {
    if (!is_communicating(mdp)) throw InputError("--unconstrained requires a communicating MDP");
    auto sol = max_entropy_rate_policy(mdp);
    policy = sol.policy;
    write_unconstrained(result, mdp, sol, observation_report(mdp, policy, obs_opt));
  } else {
    auto targets = resolve_targets(doc, target_file);
    if (targets.empty()) throw InputError("no target set: pass --target or add 'target' lines to the MDP file");
    SynthesisResult r = synthesize({&mdp, targets});
    log(LogLevel::Debug, "synthesis done, " + std::to_string(r.levels.size()) + " stages");
    policy = r.policy;
    write_synthesis(result, mdp, r, observation_report(mdp, policy, obs_opt));
  }
  std::cout << result.str();
  if (!out.empty()) {
    {
      auto os = open_out(out + ".policy");
      write_policy(os, mdp, policy);
    }
    open_out(out + ".result") << result.str();
    log(LogLevel::Info, "wrote " + out + ".policy and " + out + ".result");
  }
  return 0;
}

int cmd_simulate(const std::string& input, const std::string& policy_file, std::size_t horizon, std::size_t paths,
                 std::uint64_t seed, std::size_t window, const std::string& target_file, const std::string& csv) {
  MdpDocument doc = load_document(input);
  const Mdp& mdp = doc.mdp;
  std::ifstream in(policy_file);
  if (!in) throw InputError("cannot open '" + policy_file + "'");
  StationaryPolicy policy;
  try {
    policy = parse_policy(in, mdp);
  } catch (const std::exception& e) {
    throw InputError(std::string("policy does not match the MDP: ") + e.what());
  }
  auto batch = sample_paths(mdp, policy, horizon, paths, seed);
  MarkovChain chain = induce_chain(mdp, policy);
  std::cout << "horizon " << horizon << "\npaths " << paths << "\nseed " << seed << "\n";
  std::cout << "entropy_rate_exact " << format_number(entropy_rate(chain)) << "\n";
  std::cout << "entropy_rate_empirical " << format_number(empirical_entropy_rate(batch, chain)) << "\n";
  std::cout << "entropy_rate_plugin " << format_number(plugin_entropy_rate(batch, mdp.num_states())) << "\n";
  auto targets = resolve_targets(doc, target_file);
  if (!targets.empty()) {
    std::size_t w = window ? window : std::max<std::size_t>(1, horizon / 10);
    std::cout << "window " << w << "\n";
    std::cout << "window_pass_fraction " << format_number(surveillance_monitor(batch, targets, w)) << "\n";
  }
  if (!csv.empty()) {
    auto os = open_out(csv);
    write_batch_csv(os, batch, mdp);
  }
  return 0;
}

int cmd_gridworld(const std::string& variant, int omit, const ObservationOptions& obs_opt, const std::string& out) {
  Workspace ws = build_workspace({omit});
  const auto& targets = variant == "green" ? ws.green : ws.blue;
  SynthesisResult r = synthesize({&ws.mdp, targets});
  auto obs = observation_report(ws.mdp, r.policy, obs_opt);
  std::size_t amecs = 0;
  for (const auto& m : r.mecs) amecs += m.accepting ? 1 : 0;

  std::ostringstream result;
  write_synthesis(result, ws.mdp, r, obs);
  std::cout << "variant " << variant << "\n";
  std::cout << "states " << ws.mdp.num_states() << "\nedges " << ws.mdp.num_edges() << "\n";
  std::cout << "mecs " << mec_decomposition(ws.mdp).size() << "\namecs " << amecs << "\n";
  std::cout << "global_rate " << format_number(r.global_rate) << "\n";
  write_observation(std::cout, obs);

  if (!out.empty()) {
    std::filesystem::create_directories(out);
    auto path = [&](const std::string& name) { return (std::filesystem::path(out) / name).string(); };
    {
      auto os = open_out(path("workspace.mdp"));
      write_mdp(os, ws.mdp, targets);
    }
    {
      auto os = open_out(path("targets"));
      write_targets(os, ws.mdp, targets);
    }
    {
      auto os = open_out(path("policy"));
      write_policy(os, ws.mdp, r.policy);
    }
    open_out(path("result")) << result.str();
    auto pi = limit_distribution(induce_chain(ws.mdp, r.policy));
    {
      auto os = open_out(path("heatmap.csv"));
      write_grid_csv(os, ws, pi, 100.0);
    }
    for (int region = 1; region <= 5; ++region) {
      auto os = open_out(path("heatmap_region" + std::to_string(region) + ".csv"));
      write_region_csv(os, ws, region, pi, 100.0);
    }
    std::vector<double> spread(ws.mdp.num_states());
    for (StateIndex s = 0; s < spread.size(); ++s) spread[s] = action_spread(r.policy, s);
    {
      auto os = open_out(path("spread.csv"));
      write_grid_csv(os, ws, spread, 1.0, false);
    }
    log(LogLevel::Info, "wrote workspace, policy, result and heatmaps to " + out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy-rate maximizing policies for MDPs with surveillance tasks"};
  app.require_subcommand(1);

  std::string input, target_file, dot, out, policy_file, csv, variant = "blue";
  std::string probe_model = "huffman", probe_support = "successor";
  bool unconstrained = false, min_probes_one = false;
  std::size_t horizon = 10000, paths = 10, window = 0;
  std::uint64_t seed = 1;
  int omit = 6;

  auto* analyze = app.add_subcommand("analyze", "MECs, levels, AMECs and winning region");
  analyze->add_option("input", input, "MDP file")->required();
  analyze->add_option("--target", target_file, "target file (default: target lines of the MDP file)");
  analyze->add_option("--dot", dot, "write the contracted level graph as DOT");

  auto add_observation = [&](CLI::App* sub) {
    sub->add_flag("--min-probes-one", min_probes_one, "count at least one probe per state");
    sub->add_option("--probe-model", probe_model, "huffman or sequential")
        ->check(CLI::IsMember({"huffman", "sequential"}));
    sub->add_option("--probe-support", probe_support, "successor or action distribution")
        ->check(CLI::IsMember({"successor", "action"}));
  };

  auto* synth = app.add_subcommand("synthesize", "synthesize a maximum entropy-rate policy");
  synth->add_option("input", input, "MDP file")->required();
  synth->add_flag("--unconstrained", unconstrained, "no surveillance task (communicating MDPs)");
  synth->add_option("--target", target_file, "target file (default: target lines of the MDP file)");
  synth->add_option("--out", out, "output prefix for .policy and .result");
  add_observation(synth);

  auto* sim = app.add_subcommand("simulate", "sample paths under a policy");
  sim->add_option("input", input, "MDP file")->required();
  sim->add_option("--policy", policy_file, "policy file")->required();
  sim->add_option("--horizon", horizon, "steps per path")->check(CLI::PositiveNumber);
  sim->add_option("--paths", paths, "number of paths")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--window", window, "surveillance window (default horizon/10)");
  sim->add_option("--target", target_file, "target file (default: target lines of the MDP file)");
  sim->add_option("--csv", csv, "write the batch as CSV");

  auto* grid = app.add_subcommand("gridworld", "the five-region robot workspace");
  grid->add_option("--variant", variant, "blue or green")->check(CLI::IsMember({"blue", "green"}));
  grid->add_option("--omit-connector", omit, "corridor left out of the model (1..6)")->check(CLI::Range(1, 6));
  grid->add_option("--out", out, "output directory");
  add_observation(grid);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    auto obs = observation_options(probe_model, probe_support, min_probes_one);
    if (*analyze) return cmd_analyze(input, target_file, dot);
    if (*synth) return cmd_synthesize(input, target_file, unconstrained, obs, out);
    if (*sim) return cmd_simulate(input, policy_file, horizon, paths, seed, window, target_file, csv);
    if (*grid) return cmd_gridworld(variant, omit, obs, out);
  } catch (const NoFeasiblePolicy& e) {
    std::cerr << "entsurv: infeasible: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "entsurv: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "entsurv: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "entsurv: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "entsurv: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "entsurv: solver failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
