#pragma once

#include <optional>
#include <string>

#include "stablerepr/io.hpp"

namespace stablerepr {

/// Environment-driven logging (STABLEREPR_LOG=0 quiet, 1 info, 2 debug).
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

struct SweepSpec {
  std::string mdp_source = "fourroom";  // built-in name or a JSON file path
  std::vector<ReprMethod> methods;      // empty: all methods
  std::size_t d_min = 1;
  std::size_t d_max = 40;
  std::optional<double> gamma;          // default: the MDP's discount
  double epsilon = 0.1;                 // evaluated policy is eps-greedy(pi*)
  std::string xi_source = "behavior";   // behavior | uniform | stationary | file path
  std::uint64_t data_seed = 0;          // behavior rollout seed
  std::size_t behavior_episodes = 1000;
  std::size_t behavior_length = 50;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};       // learnability seeds
  std::vector<std::size_t> samples = {500, 5000, 50000};    // learnability transition counts
  bool exact_injection = false;  // add exact-count learnability rows (n_samples=0)
  std::size_t learnability_d = 10;
  std::size_t jobs = 1;
  std::string out_dir = ".";
};

/// Everything the analyses need about one policy-evaluation problem.
struct AnalysisInstance {
  Mdp mdp;
  Matrix eval_policy;
  PolicyMatrix pm;   // xi attached
  WeightedSpace space;
  double gamma;
};

AnalysisInstance build_instance(const SweepSpec& spec);

/// Stability/error profile over the (method, d) grid. Writes sweep.csv to
/// spec.out_dir and returns its contents.
std::string cmd_sweep(const SweepSpec& spec);

/// Subspace distance between exact and sample-estimated representations.
/// Writes learnability.csv and returns its contents.
std::string cmd_learnability(const SweepSpec& spec);

enum class LearnVariant { Schur, Krylov };

struct LearnSpec {
  std::string mdp_source = "fourroom";
  LearnVariant variant = LearnVariant::Schur;
  std::size_t d = 21;
  TrainConfig config;
  bool sample_transitions = false;  // rollout targets instead of exact expectations
  std::string xi_source = "behavior";
  std::uint64_t data_seed = 0;
  double epsilon = 0.1;
  std::string out_dir = ".";
};

/// Trains the requested learner, analyzes the extracted representation, and
/// writes checkpoint.json, loss.csv and analysis.json. Returns the analysis
/// JSON.
std::string cmd_learn(const LearnSpec& spec);

struct AnalyzeSpec {
  std::string mdp_path;
  std::string policy_path;
  std::string representation_base;  // base path of the .csv/.json pair
  std::optional<double> gamma;
  std::string xi_source = "uniform";  // uniform | stationary | file path
  std::optional<std::string> out_path;
};

/// Full stability/quality report for a user-supplied representation.
std::string cmd_analyze(const AnalyzeSpec& spec);

}  // namespace stablerepr
