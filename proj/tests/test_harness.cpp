#include "lyapmarl/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "lyapmarl/lipschitz.hpp"
#include "oracles.hpp"

using namespace lyapmarl;
namespace fs = std::filesystem;

namespace {

TrainerConfig tiny_config(uint64_t seed, bool use_lyapunov) {
  nlohmann::json doc = {{"env", {{"n_agents", 2}}},
                        {"seed", seed},
                        {"use_lyapunov", use_lyapunov},
                        {"total_episodes", 6},
                        {"warmup_steps", 60},
                        {"batch_size", 16},
                        {"checkpoint_interval", 3},
                        {"buffer_capacity", 4000}};
  return parse_config(doc);
}

}  // namespace

TEST_CASE("run_train writes the full artifact set") {
  const fs::path dir = oracles::scratch_dir("train_artifacts");
  run_train(tiny_config(5, true), dir);

  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "checkpoints" / "ep_3" / "checkpoint.txt"));
  CHECK(fs::exists(dir / "checkpoints" / "ep_6" / "checkpoint.txt"));
  CHECK(fs::exists(dir / "checkpoints" / "final" / "checkpoint.txt"));

  // The metrics table has the documented header and one row per episode.
  const auto rows = oracles::read_csv(dir / "metrics.csv");
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] ==
        std::vector<std::string>{"episode", "env_steps", "mean_return",
                                 "success", "J_Q", "J_pi", "J_L", "alpha",
                                 "mean_delta_l", "lyap_decrease_ratio"});
  for (size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 10);
    CHECK(std::stoll(rows[k][0]) == static_cast<long long>(k));
    CHECK(std::isfinite(std::stod(rows[k][2])));
  }

  // The stored config snapshot reloads to the same effective settings.
  std::ifstream cfg_in(dir / "config.json");
  const TrainerConfig snap = parse_config(nlohmann::json::parse(cfg_in));
  CHECK(snap.seed == 5);
  CHECK(snap.use_lyapunov);
  CHECK(snap.total_episodes == 6);

  // summary.json carries the aggregates.
  std::ifstream sum_in(dir / "summary.json");
  const nlohmann::json summary = nlohmann::json::parse(sum_in);
  CHECK(summary.at("episodes") == 6);
  CHECK(summary.contains("mean_return_first_window"));
  CHECK(summary.contains("mean_return_last_window"));
  CHECK(summary.at("final_alpha").get<double>() > 0.0);
}

TEST_CASE("identical configs produce byte-identical metrics") {
  const fs::path dir1 = oracles::scratch_dir("determinism_a");
  const fs::path dir2 = oracles::scratch_dir("determinism_b");
  run_train(tiny_config(11, true), dir1);
  run_train(tiny_config(11, true), dir2);
  const std::string a = oracles::read_file(dir1 / "metrics.csv");
  const std::string b = oracles::read_file(dir2 / "metrics.csv");
  REQUIRE(!a.empty());
  CHECK(a == b);

  // A different seed must actually change the trajectory of the run.
  const fs::path dir3 = oracles::scratch_dir("determinism_c");
  run_train(tiny_config(12, true), dir3);
  CHECK(oracles::read_file(dir3 / "metrics.csv") != a);
}

TEST_CASE("run_eval reports are self-consistent and deterministic") {
  const fs::path dir = oracles::scratch_dir("eval_roundtrip");
  run_train(tiny_config(7, true), dir);
  const fs::path ckpt = dir / "checkpoints" / "final";

  const EvalResult result = run_eval(ckpt, 20, 123);
  CHECK(result.report.n_episodes == 20);
  CHECK(result.report.success_rate ==
        doctest::Approx(100.0 * result.report.n_success / 20.0).epsilon(1e-12));
  CHECK(result.report.has_lyapunov);
  CHECK(result.report.lyap_decrease_ratio >= 0.0);
  CHECK(result.report.lyap_decrease_ratio <= 1.0);
  REQUIRE(result.episodes.size() == 20);

  // Rerunning the same evaluation gives the same numbers; the written
  // report matches the returned one.
  const EvalResult again = run_eval(ckpt, 20, 123);
  CHECK(again.report.mean_return == result.report.mean_return);
  CHECK(again.report.n_success == result.report.n_success);
  CHECK(again.report.mean_final_distance == result.report.mean_final_distance);

  std::ifstream report_in(ckpt / "eval_report.json");
  const nlohmann::json report = nlohmann::json::parse(report_in);
  CHECK(report.at("n_episodes") == 20);
  CHECK(report.at("n_success") == result.report.n_success);
  CHECK(report.at("success_rate").get<double>() ==
        doctest::Approx(result.report.success_rate).epsilon(1e-12));

  // success_rate recounted from the per-episode table agrees.
  const auto episode_rows = oracles::read_csv(ckpt / "eval_episodes.csv");
  REQUIRE(episode_rows.size() == 21);
  long long successes = 0;
  double return_sum = 0.0;
  for (size_t k = 1; k < episode_rows.size(); ++k) {
    successes += std::stoll(episode_rows[k][3]);
    return_sum += std::stod(episode_rows[k][2]);
  }
  CHECK(successes == result.report.n_success);
  CHECK(return_sum / 20.0 ==
        doctest::Approx(result.report.mean_return).epsilon(1e-9));

  // The trajectory dump covers every executed step of every agent.
  const auto traj_rows = oracles::read_csv(ckpt / "eval_trajectories.csv");
  long long expected_rows = 0;
  for (const EvalEpisodeRow& episode : result.episodes) {
    expected_rows += static_cast<long long>(episode.steps) * 2;
  }
  CHECK(static_cast<long long>(traj_rows.size()) == expected_rows + 1);
  REQUIRE(traj_rows[0].size() == 12);
  CHECK(traj_rows[0][8] == "a");
  CHECK(traj_rows[0][11] == "cost");

  // A different eval seed must change the draw of initial conditions.
  const EvalResult other = run_eval(ckpt, 20, 999);
  CHECK(other.report.mean_return != result.report.mean_return);
}

TEST_CASE("run_eval without a checkpoint fails loudly") {
  const fs::path dir = oracles::scratch_dir("eval_missing");
  CHECK_THROWS_AS(run_eval(dir / "nowhere", 5, 1), std::runtime_error);
}

TEST_CASE("greedy evaluation is noise-free") {
  // The same checkpoint evaluated with the same seed twice must agree
  // bitwise at the trajectory level, not just in aggregates.
  const fs::path dir = oracles::scratch_dir("eval_greedy");
  run_train(tiny_config(13, false), dir);
  const fs::path ckpt = dir / "checkpoints" / "final";
  run_eval(ckpt, 5, 44);
  const std::string first = oracles::read_file(ckpt / "eval_trajectories.csv");
  run_eval(ckpt, 5, 44);
  CHECK(oracles::read_file(ckpt / "eval_trajectories.csv") == first);
}

TEST_CASE("decrease ratio counts nonincreasing lyapunov transitions") {
  // Single linear layer: L = softplus(first input coordinate), so chosen
  // states map to exact L values.
  LyapunovCritic l;
  l.net.layers.push_back(
      {(Eigen::MatrixXd(1, 2) << 1.0, 0.0).finished(), Eigen::VectorXd::Zero(1)});

  auto pair_at = [](double z) {
    return std::make_pair(Eigen::VectorXd::Constant(1, z),
                          Eigen::VectorXd::Constant(1, 0.0));
  };
  using Pairs = std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>;

  // softplus is monotone, so ordering in z is ordering in L.
  const Pairs decreasing = {pair_at(3.0), pair_at(2.0), pair_at(1.0)};
  CHECK(lyapunov_decrease_ratio(decreasing, l) == 1.0);

  const Pairs increasing = {pair_at(1.0), pair_at(2.0), pair_at(3.0)};
  CHECK(lyapunov_decrease_ratio(increasing, l) == 0.0);

  const Pairs mixed = {pair_at(2.0), pair_at(1.0), pair_at(1.5)};
  CHECK(lyapunov_decrease_ratio(mixed, l) == 0.5);

  // Ties count as nonincreasing.
  const Pairs flat = {pair_at(1.0), pair_at(1.0), pair_at(1.0)};
  CHECK(lyapunov_decrease_ratio(flat, l) == 1.0);

  CHECK_THROWS_AS(lyapunov_decrease_ratio({pair_at(1.0)}, l),
                  std::invalid_argument);

  // Episode aggregation: too-short episodes count as fully decreasing.
  const double mean = mean_decrease_ratio({decreasing, increasing, {pair_at(0.5)}}, l);
  CHECK(mean == doctest::Approx((1.0 + 0.0 + 1.0) / 3.0).epsilon(1e-15));
}

TEST_CASE("lipschitz estimator recovers known constants") {
  auto identity = [](const Eigen::VectorXd& x) { return x; };
  auto triple = [](const Eigen::VectorXd& x) { return (3.0 * x).eval(); };
  auto constant = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Ones(x.size()).eval();
  };
  auto sample = [](Rng& rng) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-1.0, 1.0);
    return x;
  };

  CHECK(estimate_lipschitz(identity, sample, 500, 0.1, 3) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(estimate_lipschitz(triple, sample, 500, 0.1, 3) ==
        doctest::Approx(3.0).epsilon(1e-9));
  CHECK(estimate_lipschitz(constant, sample, 500, 0.1, 3) == 0.0);
}

TEST_CASE("dynamics action sensitivity comes out at dt") {
  const RendezvousEnv env = build_env(tiny_config(1, false));
  const double l_f = estimate_dynamics_action_lipschitz(env, 5000, 0.1, 77);
  // Only the velocity slots react to the action, by exactly dt per unit
  // (before saturation), so the sampled bound sits at dt.
  CHECK(l_f == doctest::Approx(env.config().dt).epsilon(1e-9));
  CHECK(l_f <= env.config().dt * (1.0 + 1e-9));
}

TEST_CASE("the lipschitz verb reports the product of the two constants") {
  const nlohmann::json out = run_lipschitz(tiny_config(2, true));
  CHECK(out.at("l_f_dynamics_action").get<double>() ==
        doctest::Approx(0.1).epsilon(1e-6));
  CHECK(out.at("l_L_lyapunov_state").get<double>() > 0.0);
  CHECK(out.at("lip_product").get<double>() ==
        doctest::Approx(out.at("l_f_dynamics_action").get<double>() *
                        out.at("l_L_lyapunov_state").get<double>())
            .epsilon(1e-12));
  CHECK(out.at("n_samples") == 10000);
}

TEST_CASE("run_compare produces matched curves, rows, and summaries") {
  const fs::path dir = oracles::scratch_dir("compare_smoke");
  TrainerConfig base = tiny_config(1, false);
  base.total_episodes = 5;
  const std::vector<CompareRow> rows = run_compare(base, {31}, dir, 6, 900);

  REQUIRE(rows.size() == 2);
  CHECK(rows[0].variant == "masac");
  CHECK(rows[1].variant == "masac_lyap");
  CHECK(rows[0].seed == 31);
  CHECK(rows[1].seed == 31);
  CHECK(rows[0].report.n_episodes == 6);
  CHECK(rows[1].report.n_episodes == 6);
  // Both rows carry a decrease statistic under the trained Lyapunov net.
  for (const CompareRow& row : rows) {
    CHECK(row.lyap_net_decrease_ratio >= 0.0);
    CHECK(row.lyap_net_decrease_ratio <= 1.0);
  }

  CHECK(fs::exists(dir / "masac_seed31.csv"));
  CHECK(fs::exists(dir / "masac_lyap_seed31.csv"));
  CHECK(fs::exists(dir / "masac_seed31" / "checkpoints" / "final" /
                   "checkpoint.txt"));
  CHECK(fs::exists(dir / "masac_lyap_seed31" / "checkpoints" / "final" /
                   "checkpoint.txt"));

  const auto table = oracles::read_csv(dir / "comparison.csv");
  REQUIRE(table.size() == 3);
  CHECK(table[0] == std::vector<std::string>{
                        "variant", "seed", "n_episodes", "n_success",
                        "success_rate", "mean_return", "mean_final_distance",
                        "lyap_decrease_ratio", "lyap_net_decrease_ratio"});
  CHECK(table[1][0] == "masac");
  CHECK(table[2][0] == "masac_lyap");
  CHECK(std::stod(table[2][5]) ==
        doctest::Approx(rows[1].report.mean_return).epsilon(1e-12));

  std::ifstream sum_in(dir / "comparison_summary.json");
  const nlohmann::json summary = nlohmann::json::parse(sum_in);
  CHECK(summary.contains("median_success_rate_masac"));
  CHECK(summary.contains("median_success_rate_masac_lyap"));
  CHECK(summary.contains("mean_lyap_decrease_ratio_masac_lyap"));
  CHECK(summary.contains("mean_lyap_decrease_ratio_cross_masac"));
  CHECK(summary.at("eval_episodes") == 6);

  // The copied learning curve is the run's own metrics file.
  CHECK(oracles::read_file(dir / "masac_seed31.csv") ==
        oracles::read_file(dir / "masac_seed31" / "metrics.csv"));
}
