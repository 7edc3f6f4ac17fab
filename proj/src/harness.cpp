#include "lyapmarl/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lyapmarl/checkpoint.hpp"
#include "lyapmarl/lipschitz.hpp"
#include "lyapmarl/trainer.hpp"

namespace lyapmarl {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_or_throw(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  return out;
}

void write_metrics_header(std::ofstream& out) {
  out << "episode,env_steps,mean_return,success,J_Q,J_pi,J_L,alpha,"
         "mean_delta_l,lyap_decrease_ratio\n";
}

void write_metrics_row(std::ofstream& out, const MetricsRow& row) {
  out << row.episode << ',' << row.env_steps << ',' << fmt(row.mean_return)
      << ',' << row.success << ',' << fmt(row.J_Q) << ',' << fmt(row.J_pi)
      << ',' << fmt(row.J_L) << ',' << fmt(row.alpha) << ','
      << fmt(row.mean_delta_l) << ',' << fmt(row.lyap_decrease_ratio) << '\n';
  out.flush();
}

void write_eval_artifacts(const std::filesystem::path& dir,
                          const EvalResult& result) {
  std::ofstream report = open_or_throw(dir / "eval_report.json");
  report << report_to_json(result.report).dump(2) << "\n";

  std::ofstream episodes = open_or_throw(dir / "eval_episodes.csv");
  episodes << "episode,steps,episode_return,success,final_distance,"
              "lyap_decrease_ratio\n";
  for (const EvalEpisodeRow& row : result.episodes) {
    episodes << row.episode << ',' << row.steps << ','
             << fmt(row.episode_return) << ',' << row.success << ','
             << fmt(row.final_distance) << ',' << fmt(row.lyap_decrease_ratio)
             << '\n';
  }

  std::ofstream traj = open_or_throw(dir / "eval_trajectories.csv");
  traj << "episode,step,agent,x,y,psi,v,omega,a,r,reward,cost\n";
  for (const TrajectoryRow& row : result.trajectory) {
    traj << row.episode << ',' << row.step << ',' << row.agent << ','
         << fmt(row.x) << ',' << fmt(row.y) << ',' << fmt(row.psi) << ','
         << fmt(row.v) << ',' << fmt(row.omega) << ',' << fmt(row.a) << ','
         << fmt(row.r) << ',' << fmt(row.reward) << ',' << fmt(row.cost)
         << '\n';
  }
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["n_episodes"] = report.n_episodes;
  doc["n_success"] = report.n_success;
  doc["success_rate"] = report.success_rate;
  doc["mean_return"] = report.mean_return;
  doc["mean_final_distance"] = report.mean_final_distance;
  doc["lyap_decrease_ratio"] = report.lyap_decrease_ratio;
  doc["has_lyapunov"] = report.has_lyapunov;
  return doc;
}

void run_train(const TrainerConfig& config,
               const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  {
    std::ofstream cfg = open_or_throw(output_dir / "config.json");
    cfg << config_to_json(config).dump(2) << "\n";
  }

  std::ofstream metrics = open_or_throw(output_dir / "metrics.csv");
  write_metrics_header(metrics);

  std::vector<double> returns;
  long long successes = 0;

  MasacTrainer trainer(config);
  MasacTrainer::Callbacks callbacks;
  callbacks.on_episode = [&](const MetricsRow& row) {
    write_metrics_row(metrics, row);
    returns.push_back(row.mean_return);
    successes += row.success;
  };
  callbacks.on_checkpoint = [&](long long episode, const CheckpointData& data) {
    save_checkpoint(
        output_dir / "checkpoints" / ("ep_" + std::to_string(episode)), data,
        config);
  };
  trainer.train(callbacks);
  save_checkpoint(output_dir / "checkpoints" / "final", trainer.snapshot(),
                  config);

  // Small summary for human inspection; everything in it is recomputable
  // from metrics.csv.
  const size_t window = std::min<size_t>(100, returns.size());
  double first = 0.0, last = 0.0;
  for (size_t i = 0; i < window; ++i) {
    first += returns[i];
    last += returns[returns.size() - window + i];
  }
  nlohmann::json summary;
  summary["episodes"] = static_cast<long long>(returns.size());
  summary["env_steps"] = trainer.env_steps();
  summary["final_alpha"] = trainer.alpha();
  summary["successes"] = successes;
  summary["mean_return_first_window"] = window > 0 ? first / window : 0.0;
  summary["mean_return_last_window"] = window > 0 ? last / window : 0.0;
  summary["window"] = static_cast<long long>(window);
  std::ofstream sum = open_or_throw(output_dir / "summary.json");
  sum << summary.dump(2) << "\n";
}

EvalResult run_eval(const std::filesystem::path& checkpoint_dir,
                    long long n_episodes, uint64_t seed) {
  TrainerConfig config;
  const CheckpointData data = load_checkpoint(checkpoint_dir, &config);
  const RendezvousEnv env = build_env(config);
  const EvalResult result =
      evaluate_policy(env, data.actors,
                      data.has_lyapunov ? &data.lyapunov : nullptr,
                      n_episodes, seed);
  write_eval_artifacts(checkpoint_dir, result);
  return result;
}

std::vector<CompareRow> run_compare(const TrainerConfig& base_config,
                                    const std::vector<uint64_t>& seeds,
                                    const std::filesystem::path& output_dir,
                                    long long eval_episodes,
                                    uint64_t eval_seed) {
  if (seeds.empty()) {
    throw std::invalid_argument("run_compare: need at least one seed");
  }
  std::filesystem::create_directories(output_dir);

  struct VariantSpec {
    const char* name;
    bool use_lyapunov;
  };
  const VariantSpec variants[] = {{"masac", false}, {"masac_lyap", true}};

  std::vector<CompareRow> rows;
  for (uint64_t seed : seeds) {
    EvalResult results[2];
    for (int v = 0; v < 2; ++v) {
      TrainerConfig config = base_config;
      config.seed = seed;
      config.use_lyapunov = variants[v].use_lyapunov;
      const std::string run_name =
          std::string(variants[v].name) + "_seed" + std::to_string(seed);
      const std::filesystem::path run_dir = output_dir / run_name;
      run_train(config, run_dir);
      std::filesystem::copy_file(run_dir / "metrics.csv",
                                 output_dir / (run_name + ".csv"),
                                 std::filesystem::copy_options::overwrite_existing);
      results[v] =
          run_eval(run_dir / "checkpoints" / "final", eval_episodes, eval_seed);
    }

    // The trained Lyapunov net of this seed, applied to both variants'
    // trajectories: context for the decrease statistic.
    const CheckpointData lyap_ckpt = load_checkpoint(
        output_dir /
        (std::string("masac_lyap_seed") + std::to_string(seed)) /
        "checkpoints" / "final");

    for (int v = 0; v < 2; ++v) {
      CompareRow row;
      row.variant = variants[v].name;
      row.seed = seed;
      row.report = results[v].report;
      row.lyap_net_decrease_ratio = mean_decrease_ratio(
          results[v].episode_pairs, lyap_ckpt.lyapunov);
      rows.push_back(std::move(row));
    }
  }

  std::ofstream table = open_or_throw(output_dir / "comparison.csv");
  table << "variant,seed,n_episodes,n_success,success_rate,mean_return,"
           "mean_final_distance,lyap_decrease_ratio,"
           "lyap_net_decrease_ratio\n";
  for (const CompareRow& row : rows) {
    table << row.variant << ',' << row.seed << ',' << row.report.n_episodes
          << ',' << row.report.n_success << ',' << fmt(row.report.success_rate)
          << ',' << fmt(row.report.mean_return) << ','
          << fmt(row.report.mean_final_distance) << ','
          << fmt(row.report.lyap_decrease_ratio) << ','
          << fmt(row.lyap_net_decrease_ratio) << '\n';
  }

  auto median = [](std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2]
                      : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  };
  std::vector<double> masac_rates, lyap_rates, lyap_ratio, cross_ratio;
  for (const CompareRow& row : rows) {
    if (row.variant == "masac") {
      masac_rates.push_back(row.report.success_rate);
      cross_ratio.push_back(row.lyap_net_decrease_ratio);
    } else {
      lyap_rates.push_back(row.report.success_rate);
      lyap_ratio.push_back(row.lyap_net_decrease_ratio);
    }
  }
  const double mean_lyap_ratio =
      std::accumulate(lyap_ratio.begin(), lyap_ratio.end(), 0.0) /
      lyap_ratio.size();
  const double mean_cross_ratio =
      std::accumulate(cross_ratio.begin(), cross_ratio.end(), 0.0) /
      cross_ratio.size();
  nlohmann::json summary;
  summary["median_success_rate_masac"] = median(masac_rates);
  summary["median_success_rate_masac_lyap"] = median(lyap_rates);
  summary["mean_lyap_decrease_ratio_masac_lyap"] = mean_lyap_ratio;
  summary["mean_lyap_decrease_ratio_cross_masac"] = mean_cross_ratio;
  summary["eval_episodes"] = eval_episodes;
  summary["eval_seed"] = eval_seed;
  std::ofstream sum = open_or_throw(output_dir / "comparison_summary.json");
  sum << summary.dump(2) << "\n";

  return rows;
}

nlohmann::json run_lipschitz(const TrainerConfig& config) {
  const RendezvousEnv env = build_env(config);
  const int n_samples = 10000;
  const double scale = 0.1;
  const double l_f = estimate_dynamics_action_lipschitz(
      env, n_samples, scale, mix_seed(config.seed, 400));
  Rng lyap_init(mix_seed(config.seed, 300));
  const LyapunovCritic lyapunov =
      make_lyapunov_critic(env.flat_state_dim() + 2 * env.n_agents(), lyap_init);
  const double l_l = estimate_lyapunov_state_lipschitz(
      lyapunov, env, n_samples, scale, mix_seed(config.seed, 401));
  nlohmann::json doc;
  doc["l_f_dynamics_action"] = l_f;
  doc["l_L_lyapunov_state"] = l_l;
  doc["lip_product"] = l_f * l_l;
  doc["n_samples"] = n_samples;
  doc["perturbation_scale"] = scale;
  doc["note"] = "sampled lower bounds; the Lyapunov net is freshly initialized";
  return doc;
}

}  // namespace lyapmarl
