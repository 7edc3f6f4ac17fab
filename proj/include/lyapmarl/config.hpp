#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyapmarl/comm_graph.hpp"
#include "lyapmarl/env.hpp"

namespace lyapmarl {

struct LyapConfig {
  int T = 5;
  double beta = 0.1;
  double cost_weight = 0.1;  // defaults to beta when not given explicitly
  double lip_product = 1.0;
  bool estimate_lipschitz = false;
};

struct TrainerConfig {
  uint64_t seed = 1;
  double gamma = 0.95;
  double tau = 0.005;
  int batch_size = 256;
  double lr_actor = 0.0003;
  double lr_critic = 0.003;
  double lr_alpha = 0.0003;
  double lr_lyapunov = 0.003;
  double lr_decay = std::pow(0.075, 0.0005);  // multiplier per update round
  double alpha_init = 0.2;
  double target_entropy = -2.0;  // per agent; the joint term scales by N
  bool use_lyapunov = false;
  long long total_episodes = 3000;
  int updates_per_step = 1;
  long long warmup_steps = 1000;
  long long checkpoint_interval = 100;
  long long buffer_capacity = 100000;

  EnvConfig env;  // env.n_agents is the one required key

  // Empty edge list with explicit_edges=false means "complete graph".
  bool explicit_edges = false;
  std::vector<std::pair<int, int>> graph_edges;

  LyapConfig lyap;
};

// Parses a JSON config document. Every key must be one of the known keys
// (unknown keys are an error naming the offending dotted path); env.n_agents
// is required; everything else falls back to the defaults above.
TrainerConfig parse_config(const nlohmann::json& doc);

// Reads the file, applies LYAPMARL_* environment variable overrides
// (prefix + uppercased dotted key with underscores, value parsed as JSON),
// then parses and validates.
TrainerConfig load_config(const std::string& path);

// Effective configuration as a JSON document with every key written out.
nlohmann::json config_to_json(const TrainerConfig& config);

void validate_config(const TrainerConfig& config);

// Communication graph from the config: explicit edge list when given,
// complete graph otherwise.
CommGraph build_graph(const TrainerConfig& config);

RendezvousEnv build_env(const TrainerConfig& config);

}  // namespace lyapmarl
