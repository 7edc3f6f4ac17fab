#include "lyapmarl/trainer.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

using namespace lyapmarl;

namespace {

TrainerConfig small_config(nlohmann::json extra = {}) {
  nlohmann::json doc = {{"env", {{"n_agents", 2}}},
                        {"seed", 3},
                        {"total_episodes", 6},
                        {"warmup_steps", 40},
                        {"batch_size", 16},
                        {"buffer_capacity", 2000},
                        {"checkpoint_interval", 100}};
  for (auto& [key, value] : extra.items()) {
    doc[key] = value;
  }
  return parse_config(doc);
}

bool nets_equal(const FeedforwardNet& a, const FeedforwardNet& b) {
  for (size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].W != b.layers[i].W || a.layers[i].b != b.layers[i].b) {
      return false;
    }
  }
  return a.layers.size() == b.layers.size();
}

// Hand-built batch of real environment states with buffer actions drawn
// uniformly, mirroring what sample_batch assembles.
UpdateBatch build_batch(const RendezvousEnv& env, int B, Rng& rng) {
  const int n = env.n_agents();
  UpdateBatch batch;
  batch.s_flat.resize(B, env.flat_state_dim());
  batch.a.resize(B, 2 * n);
  batch.r.resize(B);
  batch.s_next_flat.resize(B, env.flat_state_dim());
  batch.done.resize(B);
  batch.cost_now.resize(B);
  batch.l_targets.resize(B);
  batch.obs.resize(n);
  batch.obs_next.resize(n);
  for (int i = 0; i < n; ++i) {
    batch.obs[i].resize(B, env.obs_dim(i));
    batch.obs_next[i].resize(B, env.obs_dim(i));
  }

  for (int b = 0; b < B; ++b) {
    const GlobalState s = env.reset(1000 + b);
    std::vector<AgentAction> actions;
    for (int i = 0; i < n; ++i) {
      actions.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
      batch.a(b, 2 * i) = actions.back().accel;
      batch.a(b, 2 * i + 1) = actions.back().yaw_accel;
    }
    const StepResult step = env.step(s, actions);
    batch.s_flat.row(b) = env.flat_state(s).transpose();
    batch.s_next_flat.row(b) = env.flat_state(step.state).transpose();
    batch.r[b] = step.reward;
    batch.done[b] = step.done ? 1.0 : 0.0;
    batch.cost_now[b] = env.cost(s);
    batch.l_targets[b] = env.cost(step.state);
    for (int i = 0; i < n; ++i) {
      batch.obs[i].row(b) = env.observe(s, i).transpose();
      batch.obs_next[i].row(b) = env.observe(step.state, i).transpose();
    }
  }
  return batch;
}

}  // namespace

TEST_CASE("actor row losses decompose exactly into entropy, value, and constraint") {
  Rng rng(11);
  TrainerConfig cfg = small_config();
  const RendezvousEnv env = build_env(cfg);
  const int n = env.n_agents();

  std::vector<ActorPolicy> actors;
  for (int i = 0; i < n; ++i) {
    actors.push_back(make_actor(env.obs_dim(i), rng));
  }
  TwinQCritic critic = make_twin_critic(env.flat_state_dim() + 2 * n, rng);
  LyapunovCritic lyap = make_lyapunov_critic(env.flat_state_dim() + 2 * n, rng);

  const int B = 5;
  UpdateBatch batch = build_batch(env, B, rng);
  Eigen::MatrixXd noise(B, 2 * n);
  Eigen::MatrixXd next_actions(B, 2 * n);
  for (Eigen::Index i = 0; i < noise.size(); ++i) {
    noise.data()[i] = rng.normal();
    next_actions.data()[i] = rng.uniform(-0.9, 0.9);
  }
  const double alpha = 0.17;
  LyapConfig lyap_cfg;
  lyap_cfg.beta = 0.3;
  lyap_cfg.cost_weight = 0.2;
  lyap_cfg.lip_product = 1.5;

  const ActorUpdateResult result = actor_loss_and_grads(
      actors, critic, &lyap, batch, noise, next_actions, alpha, lyap_cfg,
      nullptr);
  REQUIRE(result.row_losses.size() == B);

  Eigen::VectorXd dl_rows(B);
  for (int b = 0; b < B; ++b) {
    // Rebuild each term through the single-sample entry points.
    double jlp = 0.0;
    Eigen::VectorXd joint(2 * n);
    for (int i = 0; i < n; ++i) {
      const ActionSample s = sample_action(
          actors[i], batch.obs[i].row(b).transpose(),
          Eigen::Vector2d(noise(b, 2 * i), noise(b, 2 * i + 1)));
      jlp += s.log_prob;
      joint.segment(2 * i, 2) = s.action;
    }
    const double qmin =
        q_min(critic, batch.s_flat.row(b).transpose(), joint, false);
    const double l_next = l_value(lyap, batch.s_next_flat.row(b).transpose(),
                                  next_actions.row(b).transpose());
    const double l_curr = l_value(lyap, batch.s_flat.row(b).transpose(),
                                  batch.a.row(b).transpose());
    const double gap = (joint - batch.a.row(b).transpose()).norm();
    dl_rows[b] = delta_l(l_next, l_curr, lyap_cfg.lip_product, gap,
                         lyap_cfg.cost_weight, batch.cost_now[b]);
    const double expected = alpha * jlp - qmin + lyap_cfg.beta * dl_rows[b];

    CHECK(result.joint_log_prob[b] == doctest::Approx(jlp).epsilon(1e-12));
    CHECK(result.row_losses[b] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(result.loss == doctest::Approx(result.row_losses.mean()).epsilon(1e-15));
  CHECK(result.mean_delta_l ==
        doctest::Approx(dl_rows.mean()).epsilon(1e-12));

  // Without the constraint the same rows lose exactly the beta term.
  const ActorUpdateResult plain = actor_loss_and_grads(
      actors, critic, nullptr, batch, noise, next_actions, alpha, lyap_cfg,
      nullptr);
  for (int b = 0; b < B; ++b) {
    CHECK(result.row_losses[b] - plain.row_losses[b] ==
          doctest::Approx(lyap_cfg.beta * dl_rows[b]).epsilon(1e-10));
  }
  CHECK(plain.mean_delta_l == 0.0);
}

TEST_CASE("actor gradients match finite differences for both variants") {
  Rng rng(13);
  nlohmann::json one_agent = {{"env", {{"n_agents", 1}}}};
  TrainerConfig cfg = parse_config(one_agent);
  const RendezvousEnv env = build_env(cfg);

  std::vector<ActorPolicy> actors = {make_actor(env.obs_dim(0), rng)};
  TwinQCritic critic = make_twin_critic(env.flat_state_dim() + 2, rng);
  LyapunovCritic lyap = make_lyapunov_critic(env.flat_state_dim() + 2, rng);

  const int B = 2;
  UpdateBatch batch = build_batch(env, B, rng);
  Eigen::MatrixXd noise(B, 2);
  Eigen::MatrixXd next_actions(B, 2);
  for (Eigen::Index i = 0; i < noise.size(); ++i) {
    noise.data()[i] = rng.normal();
    next_actions.data()[i] = rng.uniform(-0.9, 0.9);
  }
  LyapConfig lyap_cfg;
  lyap_cfg.beta = 0.25;
  lyap_cfg.cost_weight = 0.15;
  lyap_cfg.lip_product = 2.0;

  for (const bool with_lyap : {false, true}) {
    const LyapunovCritic* lptr = with_lyap ? &lyap : nullptr;
    std::vector<NetGrads> grads;
    actor_loss_and_grads(actors, critic, lptr, batch, noise, next_actions,
                         0.2, lyap_cfg, &grads);
    auto loss = [&] {
      return actor_loss_and_grads(actors, critic, lptr, batch, noise,
                                  next_actions, 0.2, lyap_cfg, nullptr)
          .loss;
    };
    const std::vector<double> fd = oracles::fd_gradient(actors[0].net, loss);
    CHECK(oracles::max_rel_error(fd, oracles::grads_flat(grads[0])) < 1e-4);
  }
}

TEST_CASE("temperature update is stationary at the entropy target") {
  // Joint target entropy for two agents at -2 each is -4; the update is
  // stationary exactly when the mean joint log prob sits at +4, i.e. when
  // the achieved entropy equals the target.
  const double joint_target = -4.0;
  double log_alpha = std::log(0.2);
  ScalarAdam adam;
  const double before = log_alpha;
  const double alpha = temperature_update(
      log_alpha, adam, Eigen::VectorXd::Constant(6, 4.0), joint_target, 3e-4);
  CHECK(log_alpha == before);
  CHECK(alpha == doctest::Approx(0.2).epsilon(1e-15));

  // Entropy below target (log probs above 4): alpha rises to restore
  // exploration. Entropy above target: alpha falls.
  double up = std::log(0.2);
  ScalarAdam up_adam;
  temperature_update(up, up_adam, Eigen::VectorXd::Constant(6, 5.0),
                     joint_target, 3e-4);
  CHECK(up > std::log(0.2));

  double down = std::log(0.2);
  ScalarAdam down_adam;
  temperature_update(down, down_adam, Eigen::VectorXd::Constant(6, 1.0),
                     joint_target, 3e-4);
  CHECK(down < std::log(0.2));
}

TEST_CASE("non-finite losses abort with the failing head named") {
  Rng rng(17);
  nlohmann::json one_agent = {{"env", {{"n_agents", 1}}}};
  const RendezvousEnv env = build_env(parse_config(one_agent));
  std::vector<ActorPolicy> actors = {make_actor(env.obs_dim(0), rng)};
  TwinQCritic critic = make_twin_critic(env.flat_state_dim() + 2, rng);
  LyapunovCritic lyap = make_lyapunov_critic(env.flat_state_dim() + 2, rng);

  UpdateBatch batch = build_batch(env, 2, rng);
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd next_actions = Eigen::MatrixXd::Zero(2, 2);
  LyapConfig broken;
  broken.lip_product = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(
      actor_loss_and_grads(actors, critic, &lyap, batch, noise, next_actions,
                           0.2, broken, nullptr),
      "actor update produced non-finite loss J_pi", std::runtime_error);

  double log_alpha = 0.0;
  ScalarAdam adam;
  const Eigen::VectorXd bad =
      Eigen::VectorXd::Constant(3, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(temperature_update(log_alpha, adam, bad, 2.0, 3e-4),
                  std::runtime_error);
}

TEST_CASE("zero updates per step collects experience but never trains") {
  TrainerConfig cfg = small_config({{"updates_per_step", 0},
                                    {"warmup_steps", 0},
                                    {"total_episodes", 3}});
  MasacTrainer trainer(cfg);
  const CheckpointData before = trainer.snapshot();
  trainer.train();
  const CheckpointData after = trainer.snapshot();

  CHECK(trainer.buffer().size() > 0);
  CHECK(nets_equal(before.actors[0].net, after.actors[0].net));
  CHECK(nets_equal(before.actors[1].net, after.actors[1].net));
  CHECK(nets_equal(before.critic.q1, after.critic.q1));
  CHECK(nets_equal(before.critic.q1_target, after.critic.q1_target));
  CHECK(before.log_alpha == after.log_alpha);
}

TEST_CASE("warmup steps act uniformly and fill a well-formed buffer") {
  // Warmup longer than the whole run: pure exploration, no updates.
  TrainerConfig cfg = small_config({{"warmup_steps", 100000},
                                    {"total_episodes", 4}});
  MasacTrainer trainer(cfg);
  const CheckpointData before = trainer.snapshot();

  std::vector<MetricsRow> rows;
  MasacTrainer::Callbacks callbacks;
  callbacks.on_episode = [&](const MetricsRow& row) { rows.push_back(row); };
  trainer.train(callbacks);

  CHECK(nets_equal(before.actors[0].net, trainer.snapshot().actors[0].net));
  CHECK(nets_equal(before.critic.q1, trainer.snapshot().critic.q1));

  REQUIRE(rows.size() == 4);
  const RendezvousEnv& env = trainer.env();
  std::map<long long, std::map<int, const TransitionRecord*>> by_episode;
  for (size_t slot = 0; slot < trainer.buffer().size(); ++slot) {
    const TransitionRecord& rec = trainer.buffer().at(slot);
    by_episode[rec.episode_id][rec.step_idx] = &rec;

    // Warmup actions are uniform draws, always strictly inside the box.
    for (Eigen::Index k = 0; k < rec.a.size(); ++k) {
      CHECK(std::abs(rec.a[k]) <= 1.0);
    }
    // The stored cost is the successor-state cost.
    CHECK(rec.cost ==
          doctest::Approx(env.cost_from_flat(rec.s_next_flat)).epsilon(1e-12));
  }

  // Records chain: s_next of step t is s of step t+1, and the per-episode
  // reward sum reproduces the reported return.
  for (const auto& [episode, steps] : by_episode) {
    double ret = 0.0;
    for (const auto& [t, rec] : steps) {
      ret += rec->r;
      const auto next = steps.find(t + 1);
      if (next != steps.end()) {
        CHECK(rec->s_next_flat == next->second->s_flat);
      }
    }
    REQUIRE(episode >= 1);
    REQUIRE(episode <= 4);
    CHECK(rows[episode - 1].mean_return == doctest::Approx(ret).epsilon(1e-12));
    CHECK(rows[episode - 1].J_Q == 0.0);
    CHECK(rows[episode - 1].J_pi == 0.0);
  }

  // env_steps accumulates monotonically.
  for (size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].env_steps > rows[k - 1].env_steps);
    CHECK(rows[k].episode == rows[k - 1].episode + 1);
  }
}

TEST_CASE("training runs are deterministic given the seed") {
  auto run = [](uint64_t seed) {
    TrainerConfig cfg = small_config({{"seed", seed},
                                      {"use_lyapunov", true},
                                      {"total_episodes", 5},
                                      {"warmup_steps", 30},
                                      {"batch_size", 8}});
    std::vector<MetricsRow> rows;
    MasacTrainer trainer(cfg);
    MasacTrainer::Callbacks callbacks;
    callbacks.on_episode = [&](const MetricsRow& row) { rows.push_back(row); };
    trainer.train(callbacks);
    return rows;
  };

  const std::vector<MetricsRow> a = run(21);
  const std::vector<MetricsRow> b = run(21);
  const std::vector<MetricsRow> c = run(22);
  REQUIRE(a.size() == b.size());
  bool identical_to_c = true;
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].mean_return == b[k].mean_return);
    CHECK(a[k].J_Q == b[k].J_Q);
    CHECK(a[k].J_pi == b[k].J_pi);
    CHECK(a[k].J_L == b[k].J_L);
    CHECK(a[k].alpha == b[k].alpha);
    CHECK(a[k].mean_delta_l == b[k].mean_delta_l);
    if (a[k].mean_return != c[k].mean_return) {
      identical_to_c = false;
    }
  }
  CHECK_FALSE(identical_to_c);
}

TEST_CASE("the lyapunov net trains only when the constraint is on") {
  TrainerConfig off = small_config({{"use_lyapunov", false},
                                    {"warmup_steps", 20},
                                    {"total_episodes", 3},
                                    {"batch_size", 8}});
  MasacTrainer plain(off);
  const CheckpointData before = plain.snapshot();
  plain.train();
  CHECK(nets_equal(before.lyapunov.net, plain.snapshot().lyapunov.net));
  CHECK_FALSE(plain.snapshot().has_lyapunov);
  // The policies did move.
  CHECK_FALSE(nets_equal(before.actors[0].net, plain.snapshot().actors[0].net));

  TrainerConfig on = small_config({{"use_lyapunov", true},
                                   {"warmup_steps", 20},
                                   {"total_episodes", 3},
                                   {"batch_size", 8}});
  MasacTrainer constrained(on);
  const CheckpointData lyap_before = constrained.snapshot();
  constrained.train();
  CHECK_FALSE(
      nets_equal(lyap_before.lyapunov.net, constrained.snapshot().lyapunov.net));
  CHECK(constrained.snapshot().has_lyapunov);
}

TEST_CASE("lipschitz product comes from config unless estimation is requested") {
  TrainerConfig fixed = small_config({{"use_lyapunov", true},
                                      {"lyap", {{"lip_product", 3.5}}}});
  CHECK(MasacTrainer(fixed).lip_product() == 3.5);

  TrainerConfig estimated = small_config(
      {{"use_lyapunov", true}, {"lyap", {{"estimate_lipschitz", true}}}});
  MasacTrainer a(estimated);
  MasacTrainer b(estimated);
  CHECK(a.lip_product() > 0.0);
  CHECK(a.lip_product() == b.lip_product());
  CHECK(a.lip_product() != 1.0);
}

TEST_CASE("a fifty episode smoke run keeps every reported quantity finite") {
  TrainerConfig cfg = small_config({{"use_lyapunov", true},
                                    {"total_episodes", 50},
                                    {"warmup_steps", 200},
                                    {"batch_size", 32},
                                    {"seed", 9}});
  std::vector<MetricsRow> rows;
  MasacTrainer trainer(cfg);
  MasacTrainer::Callbacks callbacks;
  callbacks.on_episode = [&](const MetricsRow& row) { rows.push_back(row); };
  trainer.train(callbacks);

  REQUIRE(rows.size() == 50);
  for (const MetricsRow& row : rows) {
    CHECK(std::isfinite(row.mean_return));
    CHECK(std::isfinite(row.J_Q));
    CHECK(std::isfinite(row.J_pi));
    CHECK(std::isfinite(row.J_L));
    CHECK(std::isfinite(row.mean_delta_l));
    CHECK(row.alpha > 0.0);
    CHECK((row.success == 0 || row.success == 1));
    CHECK(row.lyap_decrease_ratio >= 0.0);
    CHECK(row.lyap_decrease_ratio <= 1.0);
  }
  // Updates actually happened after warmup.
  bool any_update = false;
  for (const MetricsRow& row : rows) {
    if (row.J_Q != 0.0) {
      any_update = true;
    }
  }
  CHECK(any_update);
}

TEST_CASE("checkpoint callback fires on the configured interval") {
  TrainerConfig cfg = small_config({{"total_episodes", 6},
                                    {"checkpoint_interval", 2},
                                    {"warmup_steps", 100000}});
  std::vector<long long> checkpoints;
  MasacTrainer trainer(cfg);
  MasacTrainer::Callbacks callbacks;
  callbacks.on_checkpoint = [&](long long episode, const CheckpointData&) {
    checkpoints.push_back(episode);
  };
  trainer.train(callbacks);
  CHECK(checkpoints == std::vector<long long>{2, 4, 6});
}

TEST_CASE("a disconnected communication graph is rejected") {
  nlohmann::json doc = {{"env", {{"n_agents", 3}}},
                        {"graph", {{"edges", {{0, 1}}}}}};
  CHECK_THROWS_AS(MasacTrainer(parse_config(doc)), std::invalid_argument);
}
