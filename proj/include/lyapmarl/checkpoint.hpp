#pragma once

#include <filesystem>
#include <vector>

#include "lyapmarl/actor.hpp"
#include "lyapmarl/config.hpp"
#include "lyapmarl/critic.hpp"

namespace lyapmarl {

// Everything needed to evaluate (and audit) a trained run: the per-agent
// policies, the centralized critics with their targets, the optional
// Lyapunov net, and the temperature.
struct CheckpointData {
  std::vector<ActorPolicy> actors;
  TwinQCritic critic;
  bool has_lyapunov = false;
  LyapunovCritic lyapunov;
  double log_alpha = 0.0;
};

// Writes checkpoint.txt (records actor_<i>, q1, q2, q1_target, q2_target,
// optionally lyapunov, plus the scalar log_alpha) and a config.json snapshot
// into the directory, creating it if needed. The text format is lossless.
void save_checkpoint(const std::filesystem::path& dir,
                     const CheckpointData& data, const TrainerConfig& config);

// Loads a checkpoint directory written by save_checkpoint; the returned
// config is the stored snapshot (no environment overrides applied).
CheckpointData load_checkpoint(const std::filesystem::path& dir,
                               TrainerConfig* config_out = nullptr);

}  // namespace lyapmarl
