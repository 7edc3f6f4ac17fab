#include "lyapmarl/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace lyapmarl {

namespace {

constexpr const char* kHeader = "lyapmarl-checkpoint 1";

}  // namespace

void save_checkpoint(const std::filesystem::path& dir,
                     const CheckpointData& data, const TrainerConfig& config) {
  std::filesystem::create_directories(dir);

  std::ofstream out(dir / "checkpoint.txt");
  if (!out) {
    throw std::runtime_error("cannot write checkpoint to " + dir.string());
  }
  out << kHeader << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", data.log_alpha);
  out << "scalar log_alpha " << buf << "\n";
  for (size_t i = 0; i < data.actors.size(); ++i) {
    out << "record actor_" << i << "\n";
    write_net(out, data.actors[i].net);
  }
  out << "record q1\n";
  write_net(out, data.critic.q1);
  out << "record q2\n";
  write_net(out, data.critic.q2);
  out << "record q1_target\n";
  write_net(out, data.critic.q1_target);
  out << "record q2_target\n";
  write_net(out, data.critic.q2_target);
  if (data.has_lyapunov) {
    out << "record lyapunov\n";
    write_net(out, data.lyapunov.net);
  }
  out.close();
  if (!out) {
    throw std::runtime_error("failed writing checkpoint to " + dir.string());
  }

  std::ofstream cfg(dir / "config.json");
  if (!cfg) {
    throw std::runtime_error("cannot write config snapshot to " + dir.string());
  }
  cfg << config_to_json(config).dump(2) << "\n";
}

CheckpointData load_checkpoint(const std::filesystem::path& dir,
                               TrainerConfig* config_out) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) {
    throw std::runtime_error("missing config.json in checkpoint " +
                             dir.string());
  }
  nlohmann::json cfg_doc;
  try {
    cfg_doc = nlohmann::json::parse(cfg_in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("corrupt config.json in checkpoint " +
                             dir.string() + ": " + e.what());
  }
  const TrainerConfig config = parse_config(cfg_doc);
  if (config_out != nullptr) {
    *config_out = config;
  }

  std::ifstream in(dir / "checkpoint.txt");
  if (!in) {
    throw std::runtime_error("missing checkpoint.txt in " + dir.string());
  }
  std::string word, version;
  if (!(in >> word >> version) || word != "lyapmarl-checkpoint") {
    throw std::runtime_error("corrupt checkpoint header in " + dir.string());
  }

  double log_alpha = 0.0;
  std::map<std::string, FeedforwardNet> records;
  std::string tag;
  while (in >> tag) {
    if (tag == "scalar") {
      std::string name;
      double value;
      if (!(in >> name >> value)) {
        throw std::runtime_error("corrupt scalar record in " + dir.string());
      }
      if (name == "log_alpha") {
        log_alpha = value;
      }
    } else if (tag == "record") {
      std::string name;
      if (!(in >> name)) {
        throw std::runtime_error("corrupt record header in " + dir.string());
      }
      records[name] = read_net(in);
    } else {
      throw std::runtime_error("unexpected token '" + tag +
                               "' in checkpoint " + dir.string());
    }
  }

  auto take = [&](const std::string& name) -> FeedforwardNet {
    auto it = records.find(name);
    if (it == records.end()) {
      throw std::runtime_error("checkpoint " + dir.string() +
                               " is missing record " + name);
    }
    return std::move(it->second);
  };

  CheckpointData data;
  data.log_alpha = log_alpha;
  data.actors.resize(config.env.n_agents);
  for (int i = 0; i < config.env.n_agents; ++i) {
    data.actors[i].net = take("actor_" + std::to_string(i));
  }
  data.critic.q1 = take("q1");
  data.critic.q2 = take("q2");
  data.critic.q1_target = take("q1_target");
  data.critic.q2_target = take("q2_target");
  if (records.find("lyapunov") != records.end()) {
    data.has_lyapunov = true;
    data.lyapunov.net = take("lyapunov");
  }
  return data;
}

}  // namespace lyapmarl
