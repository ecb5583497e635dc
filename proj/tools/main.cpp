#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stablerepr/cli.hpp"

namespace {

using namespace stablerepr;

std::vector<ReprMethod> parse_methods(const std::vector<std::string>& names) {
  std::vector<ReprMethod> out;
  for (const auto& name : names) {
    const auto m = repr_method_from_name(name);
    if (!m) throw std::invalid_argument("unknown method: " + name);
    out.push_back(*m);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability analysis and representation learning for off-policy TD(0)"};
  app.require_subcommand(1);

  SweepSpec sweep_spec;
  std::vector<std::string> method_names;
  double gamma_flag = -1.0;

  auto add_instance_flags = [&](CLI::App* cmd) {
    cmd->add_option("--mdp", sweep_spec.mdp_source, "Built-in name (fourroom, two-state) or MDP JSON path");
    cmd->add_option("--gamma", gamma_flag, "Discount override (default: the MDP's)");
    cmd->add_option("--xi", sweep_spec.xi_source, "behavior | uniform | stationary | vector JSON path");
    cmd->add_option("--data-seed", sweep_spec.data_seed, "Behavior rollout seed");
    cmd->add_option("--epsilon", sweep_spec.epsilon, "Epsilon of the evaluated eps-greedy policy");
    cmd->add_option("--jobs", sweep_spec.jobs, "Concurrent cells");
    cmd->add_option("--out", sweep_spec.out_dir, "Output directory");
  };

  auto* sweep = app.add_subcommand("sweep", "Stability/error profile over (method, d)");
  add_instance_flags(sweep);
  sweep->add_option("--methods", method_names, "Subset of methods")->delimiter(',');
  sweep->add_option("--d-min", sweep_spec.d_min, "Smallest d");
  sweep->add_option("--d-max", sweep_spec.d_max, "Largest d");

  auto* learnability = app.add_subcommand("learnability", "Sample-estimation error study");
  add_instance_flags(learnability);
  learnability->add_option("--methods", method_names, "Subset of methods")->delimiter(',');
  learnability->add_option("--d", sweep_spec.learnability_d, "Number of features");
  learnability->add_option("--samples", sweep_spec.samples, "Transition counts")->delimiter(',');
  learnability->add_option("--seeds", sweep_spec.seeds, "Seeds")->delimiter(',');
  learnability->add_flag("--exact-injection", sweep_spec.exact_injection,
                         "Add exact-count rows (n_samples=0)");

  LearnSpec learn_spec;
  std::string variant_name = "schur";
  std::string optimizer_name;
  auto* learn = app.add_subcommand("learn", "Gradient-descent representation learning");
  learn->add_option("variant", variant_name, "schur | krylov")->required();
  learn->add_option("--mdp", learn_spec.mdp_source, "MDP source");
  learn->add_option("--d", learn_spec.d, "Hidden width");
  learn->add_option("--steps", learn_spec.config.steps, "Training steps");
  learn->add_option("--minibatch", learn_spec.config.minibatch, "Minibatch size");
  learn->add_option("--step-size", learn_spec.config.step_size, "Optimizer step size");
  learn->add_option("--optimizer", optimizer_name, "plain-sgd | adaptive-moments");
  learn->add_option("--refresh", learn_spec.config.target_refresh_interval,
                    "Target refresh interval");
  learn->add_option("--seed", learn_spec.config.rng_seed, "Training seed");
  learn->add_flag("--sample-transitions", learn_spec.sample_transitions,
                  "Rollout targets instead of exact expectations");
  learn->add_option("--xi", learn_spec.xi_source, "Data distribution source");
  learn->add_option("--data-seed", learn_spec.data_seed, "Behavior rollout seed");
  learn->add_option("--out", learn_spec.out_dir, "Output directory");

  AnalyzeSpec analyze_spec;
  std::string analyze_out;
  auto* analyze = app.add_subcommand("analyze", "Stability report for a stored representation");
  analyze->add_option("--mdp", analyze_spec.mdp_path, "MDP JSON path")->required();
  analyze->add_option("--policy", analyze_spec.policy_path, "Policy JSON path")->required();
  analyze->add_option("--representation", analyze_spec.representation_base,
                      "Base path of the <base>.csv/<base>.json pair")
      ->required();
  analyze->add_option("--gamma", gamma_flag, "Discount override");
  analyze->add_option("--xi", analyze_spec.xi_source, "uniform | stationary | vector JSON path");
  analyze->add_option("--out", analyze_out, "Write the report here as well");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gamma_flag >= 0.0) {
      sweep_spec.gamma = gamma_flag;
      analyze_spec.gamma = gamma_flag;
    }
    sweep_spec.methods = parse_methods(method_names);

    if (sweep->parsed()) {
      std::cout << cmd_sweep(sweep_spec);
    } else if (learnability->parsed()) {
      std::cout << cmd_learnability(sweep_spec);
    } else if (learn->parsed()) {
      if (variant_name == "schur") {
        learn_spec.variant = LearnVariant::Schur;
      } else if (variant_name == "krylov") {
        learn_spec.variant = LearnVariant::Krylov;
        // Variant defaults, kept unless overridden on the command line.
        if (learn->count("--optimizer") == 0)
          learn_spec.config.optimizer = OptimizerKind::AdaptiveMoments;
        if (learn->count("--step-size") == 0) learn_spec.config.step_size = 1e-3;
      } else {
        throw std::invalid_argument("unknown learn variant: " + variant_name);
      }
      if (!optimizer_name.empty()) {
        if (optimizer_name == "plain-sgd") {
          learn_spec.config.optimizer = OptimizerKind::PlainSgd;
        } else if (optimizer_name == "adaptive-moments") {
          learn_spec.config.optimizer = OptimizerKind::AdaptiveMoments;
        } else {
          throw std::invalid_argument("unknown optimizer: " + optimizer_name);
        }
      }
      std::cout << cmd_learn(learn_spec) << '\n';
    } else if (analyze->parsed()) {
      if (!analyze_out.empty()) analyze_spec.out_path = analyze_out;
      std::cout << cmd_analyze(analyze_spec) << '\n';
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const stablerepr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
