#include "lyapmarl/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace lyapmarl {

namespace {

using nlohmann::json;

const std::set<std::string> kTopKeys = {
    "seed",          "gamma",          "tau",
    "batch_size",    "lr_actor",       "lr_critic",
    "lr_alpha",      "lr_lyapunov",    "lr_decay",
    "alpha_init",    "target_entropy", "use_lyapunov",
    "total_episodes", "updates_per_step", "warmup_steps",
    "checkpoint_interval", "buffer_capacity",
    "env",           "graph",          "lyap"};

const std::set<std::string> kEnvKeys = {
    "n_agents", "dt",    "episode_length", "leaders",       "target",
    "success_radius", "v_max", "omega_max",  "w_v", "success_bonus"};

const std::set<std::string> kGraphKeys = {"edges"};

const std::set<std::string> kLyapKeys = {"T", "beta", "cost_weight",
                                         "lip_product", "estimate_lipschitz"};

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    if (known.find(key) == known.end()) {
      throw std::runtime_error("unknown config key: " + prefix + key);
    }
  }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      throw std::runtime_error(std::string("config key ") + key +
                               " has the wrong type: " + e.what());
    }
  }
}

std::string env_var_name(const std::string& dotted) {
  std::string name = "LYAPMARL_";
  for (char c : dotted) {
    name.push_back(c == '.' ? '_'
                            : static_cast<char>(std::toupper(
                                  static_cast<unsigned char>(c))));
  }
  return name;
}

// Applies LYAPMARL_<KEY> overrides for every known dotted key path. Values
// are parsed as JSON so numbers, booleans, and arrays all work.
void apply_env_overrides(json& doc) {
  auto override_leaf = [](json& section, const std::string& dotted,
                          const std::string& leaf) {
    const char* raw = std::getenv(env_var_name(dotted).c_str());
    if (raw == nullptr) {
      return;
    }
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      throw std::runtime_error("environment override " + env_var_name(dotted) +
                               " is not valid JSON: " + raw);
    }
    section[leaf] = value;
  };

  auto override_section = [&](const char* section,
                              const std::set<std::string>& keys) {
    for (const std::string& key : keys) {
      const std::string dotted = std::string(section) + "." + key;
      if (std::getenv(env_var_name(dotted).c_str()) != nullptr) {
        if (!doc.contains(section)) doc[section] = json::object();
        override_leaf(doc[section], dotted, key);
      }
    }
  };

  for (const std::string& key : kTopKeys) {
    if (key == "env" || key == "graph" || key == "lyap") {
      continue;
    }
    override_leaf(doc, key, key);
  }
  override_section("env", kEnvKeys);
  override_section("graph", kGraphKeys);
  override_section("lyap", kLyapKeys);
}

}  // namespace

TrainerConfig parse_config(const json& doc) {
  if (!doc.is_object()) {
    throw std::runtime_error("config root must be an object");
  }
  reject_unknown(doc, kTopKeys, "");

  TrainerConfig config;
  read_key(doc, "seed", config.seed);
  read_key(doc, "gamma", config.gamma);
  read_key(doc, "tau", config.tau);
  read_key(doc, "batch_size", config.batch_size);
  read_key(doc, "lr_actor", config.lr_actor);
  read_key(doc, "lr_critic", config.lr_critic);
  read_key(doc, "lr_alpha", config.lr_alpha);
  read_key(doc, "lr_lyapunov", config.lr_lyapunov);
  read_key(doc, "lr_decay", config.lr_decay);
  read_key(doc, "alpha_init", config.alpha_init);
  read_key(doc, "target_entropy", config.target_entropy);
  read_key(doc, "use_lyapunov", config.use_lyapunov);
  read_key(doc, "total_episodes", config.total_episodes);
  read_key(doc, "updates_per_step", config.updates_per_step);
  read_key(doc, "warmup_steps", config.warmup_steps);
  read_key(doc, "checkpoint_interval", config.checkpoint_interval);
  read_key(doc, "buffer_capacity", config.buffer_capacity);

  if (!doc.contains("env") || !doc.at("env").is_object()) {
    throw std::runtime_error("missing required config section: env");
  }
  const json& env = doc.at("env");
  reject_unknown(env, kEnvKeys, "env.");
  if (!env.contains("n_agents")) {
    throw std::runtime_error("missing required config key: env.n_agents");
  }
  read_key(env, "n_agents", config.env.n_agents);
  read_key(env, "dt", config.env.dt);
  read_key(env, "episode_length", config.env.episode_length);
  read_key(env, "leaders", config.env.leaders);
  if (env.contains("target")) {
    const json& target = env.at("target");
    if (!target.is_array() || target.size() != 2) {
      throw std::runtime_error("config key env.target must be [x, y]");
    }
    config.env.target = {target[0].get<double>(), target[1].get<double>()};
  }
  read_key(env, "success_radius", config.env.success_radius);
  read_key(env, "v_max", config.env.v_max);
  read_key(env, "omega_max", config.env.omega_max);
  read_key(env, "w_v", config.env.w_v);
  read_key(env, "success_bonus", config.env.success_bonus);

  if (doc.contains("graph")) {
    const json& graph = doc.at("graph");
    reject_unknown(graph, kGraphKeys, "graph.");
    if (graph.contains("edges")) {
      config.explicit_edges = true;
      for (const json& edge : graph.at("edges")) {
        if (!edge.is_array() || edge.size() != 2) {
          throw std::runtime_error("config key graph.edges must hold [i, j] pairs");
        }
        config.graph_edges.emplace_back(edge[0].get<int>(),
                                        edge[1].get<int>());
      }
    }
  }

  bool cost_weight_given = false;
  if (doc.contains("lyap")) {
    const json& lyap = doc.at("lyap");
    reject_unknown(lyap, kLyapKeys, "lyap.");
    read_key(lyap, "T", config.lyap.T);
    read_key(lyap, "beta", config.lyap.beta);
    cost_weight_given = lyap.contains("cost_weight");
    read_key(lyap, "cost_weight", config.lyap.cost_weight);
    read_key(lyap, "lip_product", config.lyap.lip_product);
    read_key(lyap, "estimate_lipschitz", config.lyap.estimate_lipschitz);
  }
  if (!cost_weight_given) {
    config.lyap.cost_weight = config.lyap.beta;
  }

  validate_config(config);
  return config;
}

TrainerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  apply_env_overrides(doc);
  return parse_config(doc);
}

json config_to_json(const TrainerConfig& config) {
  json doc;
  doc["seed"] = config.seed;
  doc["gamma"] = config.gamma;
  doc["tau"] = config.tau;
  doc["batch_size"] = config.batch_size;
  doc["lr_actor"] = config.lr_actor;
  doc["lr_critic"] = config.lr_critic;
  doc["lr_alpha"] = config.lr_alpha;
  doc["lr_lyapunov"] = config.lr_lyapunov;
  doc["lr_decay"] = config.lr_decay;
  doc["alpha_init"] = config.alpha_init;
  doc["target_entropy"] = config.target_entropy;
  doc["use_lyapunov"] = config.use_lyapunov;
  doc["total_episodes"] = config.total_episodes;
  doc["updates_per_step"] = config.updates_per_step;
  doc["warmup_steps"] = config.warmup_steps;
  doc["checkpoint_interval"] = config.checkpoint_interval;
  doc["buffer_capacity"] = config.buffer_capacity;
  doc["env"]["n_agents"] = config.env.n_agents;
  doc["env"]["dt"] = config.env.dt;
  doc["env"]["episode_length"] = config.env.episode_length;
  doc["env"]["leaders"] = config.env.leaders;
  doc["env"]["target"] = {config.env.target[0], config.env.target[1]};
  doc["env"]["success_radius"] = config.env.success_radius;
  doc["env"]["v_max"] = config.env.v_max;
  doc["env"]["omega_max"] = config.env.omega_max;
  doc["env"]["w_v"] = config.env.w_v;
  doc["env"]["success_bonus"] = config.env.success_bonus;
  if (config.explicit_edges) {
    json edges = json::array();
    for (const auto& [a, b] : config.graph_edges) {
      edges.push_back({a, b});
    }
    doc["graph"]["edges"] = edges;
  }
  doc["lyap"]["T"] = config.lyap.T;
  doc["lyap"]["beta"] = config.lyap.beta;
  doc["lyap"]["cost_weight"] = config.lyap.cost_weight;
  doc["lyap"]["lip_product"] = config.lyap.lip_product;
  doc["lyap"]["estimate_lipschitz"] = config.lyap.estimate_lipschitz;
  return doc;
}

void validate_config(const TrainerConfig& config) {
  auto fail = [](const std::string& message) {
    throw std::runtime_error("invalid config: " + message);
  };
  if (config.gamma < 0.0 || config.gamma >= 1.0) fail("gamma must be in [0, 1)");
  if (config.tau <= 0.0 || config.tau > 1.0) fail("tau must be in (0, 1]");
  if (config.batch_size < 1) fail("batch_size must be >= 1");
  if (config.lr_actor <= 0.0 || config.lr_critic <= 0.0 ||
      config.lr_alpha <= 0.0 || config.lr_lyapunov <= 0.0) {
    fail("learning rates must be positive");
  }
  if (config.lr_decay <= 0.0 || config.lr_decay > 1.0) {
    fail("lr_decay must be in (0, 1]");
  }
  if (config.alpha_init <= 0.0) fail("alpha_init must be positive");
  if (config.total_episodes < 1) fail("total_episodes must be >= 1");
  if (config.updates_per_step < 0) fail("updates_per_step must be >= 0");
  if (config.warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (config.checkpoint_interval < 0) fail("checkpoint_interval must be >= 0");
  if (config.buffer_capacity < 1) fail("buffer_capacity must be >= 1");
  if (config.env.n_agents < 1) fail("env.n_agents must be >= 1");
  if (config.env.dt <= 0.0) fail("env.dt must be positive");
  if (config.env.episode_length < 1) fail("env.episode_length must be >= 1");
  if (config.env.success_radius <= 0.0) fail("env.success_radius must be positive");
  if (config.env.v_max <= 0.0 || config.env.omega_max <= 0.0) {
    fail("env.v_max and env.omega_max must be positive");
  }
  if (config.env.w_v < 0.0) fail("env.w_v must be >= 0");
  if (config.lyap.T < 0) fail("lyap.T must be >= 0");
  if (config.lyap.beta < 0.0 || config.lyap.beta > 1.0) {
    fail("lyap.beta must be in [0, 1]");
  }
  if (config.lyap.lip_product < 0.0) fail("lyap.lip_product must be >= 0");
  if (config.lyap.cost_weight < 0.0) fail("lyap.cost_weight must be >= 0");
}

CommGraph build_graph(const TrainerConfig& config) {
  if (config.explicit_edges) {
    return CommGraph(config.env.n_agents, config.graph_edges);
  }
  return CommGraph::complete(config.env.n_agents);
}

RendezvousEnv build_env(const TrainerConfig& config) {
  return RendezvousEnv(config.env, build_graph(config));
}

}  // namespace lyapmarl
