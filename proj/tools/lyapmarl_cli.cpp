#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lyapmarl/config.hpp"
#include "lyapmarl/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-agent actor-critic for the unicycle "
               "rendezvous task, with an optional Lyapunov constraint"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string checkpoint_dir;
  long long episodes = 500;
  uint64_t seed = 1;
  std::vector<uint64_t> seeds;
  uint64_t eval_seed = 777000;

  CLI::App* train = app.add_subcommand("train", "train one run from a config");
  train->add_option("config", config_path, "config file (JSON)")->required();
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval =
      app.add_subcommand("eval", "evaluate a checkpoint with greedy policies");
  eval->add_option("checkpoint_dir", checkpoint_dir, "checkpoint directory")
      ->required();
  eval->add_option("--episodes", episodes, "number of evaluation episodes");
  eval->add_option("--seed", seed, "base seed; episode e resets with seed+e");

  CLI::App* compare = app.add_subcommand(
      "compare", "train and evaluate both variants over a list of seeds");
  compare->add_option("config", config_path, "config file (JSON)")->required();
  compare->add_option("--seeds", seeds, "training seeds")
      ->required()
      ->delimiter(',');
  compare->add_option("--out", out_dir, "output directory")->required();
  compare->add_option("--episodes", episodes, "evaluation episodes per run");
  compare->add_option("--eval-seed", eval_seed, "base seed for evaluations");

  CLI::App* lipschitz = app.add_subcommand(
      "lipschitz", "sampled Lipschitz lower bounds for dynamics and Lyapunov net");
  lipschitz->add_option("config", config_path, "config file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      lyapmarl::run_train(lyapmarl::load_config(config_path), out_dir);
      std::cout << "training complete; artifacts in " << out_dir << "\n";
    } else if (eval->parsed()) {
      const lyapmarl::EvalResult result =
          lyapmarl::run_eval(checkpoint_dir, episodes, seed);
      std::cout << lyapmarl::report_to_json(result.report).dump(2) << "\n";
    } else if (compare->parsed()) {
      lyapmarl::run_compare(lyapmarl::load_config(config_path), seeds, out_dir,
                            episodes, eval_seed);
      std::cout << "comparison complete; table in " << out_dir
                << "/comparison.csv\n";
    } else if (lipschitz->parsed()) {
      std::cout << lyapmarl::run_lipschitz(lyapmarl::load_config(config_path))
                       .dump(2)
                << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
