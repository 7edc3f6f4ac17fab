#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lyapmarl/config.hpp"
#include "lyapmarl/eval.hpp"

namespace lyapmarl {

// Trains one run into output_dir: metrics.csv (flushed per episode, so a
// failed run keeps its partial history), config.json, periodic checkpoints
// under checkpoints/ep_<n>, a final checkpoint under checkpoints/final, and
// summary.json.
void run_train(const TrainerConfig& config,
               const std::filesystem::path& output_dir);

// Evaluates the checkpoint with greedy policies over n_episodes episodes
// seeded seed + episode index. Writes eval_report.json, eval_episodes.csv,
// and eval_trajectories.csv next to the checkpoint and returns the full
// result.
EvalResult run_eval(const std::filesystem::path& checkpoint_dir,
                    long long n_episodes, uint64_t seed);

// One comparison row: a (variant, seed) evaluation.
struct CompareRow {
  std::string variant;  // "masac" or "masac_lyap"
  uint64_t seed = 0;
  EvalReport report;
  // Decrease statistic under the matching seed's trained Lyapunov net; for
  // the masac variant this is the cross check of the acceptance criteria,
  // for masac_lyap it coincides with report.lyap_decrease_ratio.
  double lyap_net_decrease_ratio = 0.0;
};

// Trains both variants per seed, evaluates every final checkpoint on the
// same evaluation seeds, copies per-variant learning curves to
// masac_seed<k>.csv / masac_lyap_seed<k>.csv, and writes comparison.csv
// plus comparison_summary.json into output_dir.
std::vector<CompareRow> run_compare(const TrainerConfig& base_config,
                                    const std::vector<uint64_t>& seeds,
                                    const std::filesystem::path& output_dir,
                                    long long eval_episodes,
                                    uint64_t eval_seed);

// Sampled Lipschitz lower bounds for the dynamics (in the action) and a
// freshly initialized Lyapunov net (in the state), plus their product.
nlohmann::json run_lipschitz(const TrainerConfig& config);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace lyapmarl
