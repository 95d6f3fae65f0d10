#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fran/baselines.hpp"
#include "fran/ddpg.hpp"
#include "fran/errors.hpp"

using namespace fran;

namespace {

DdpgHyperParams small_hp() {
  DdpgHyperParams hp;
  hp.hidden = {16, 8};
  hp.batch_size = 8;
  hp.replay_capacity = 500;
  return hp;
}

void set_constant(Mlp& net, double value) {
  for (double& v : net.mutable_params()) v = 0.0;
  net.mutable_bias(net.num_layers() - 1)(0) = value;
}

std::vector<const Transition*> ptrs(const std::vector<Transition>& ts) {
  std::vector<const Transition*> out;
  for (const Transition& t : ts) out.push_back(&t);
  return out;
}

std::vector<Transition> random_batch(std::mt19937_64& rng, std::size_t k, std::size_t sd, std::size_t ad) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Transition> ts(k);
  for (Transition& t : ts) {
    t.state.resize(sd);
    t.next_state.resize(sd);
    t.action.resize(ad);
    for (double& v : t.state) v = u(rng);
    for (double& v : t.next_state) v = u(rng);
    for (double& v : t.action) v = u(rng);
    t.reward = -u(rng);
  }
  return ts;
}

}  // namespace

TEST(Ddpg, TargetsStartEqualToOnline) {
  DdpgAgent agent(8, 3, small_hp(), 1);
  EXPECT_EQ(agent.target_actor(), agent.actor());
  EXPECT_EQ(agent.target_critic(), agent.critic());
  EXPECT_EQ(agent.actor().input_dim(), 8u);
  EXPECT_EQ(agent.actor().output_dim(), 3u);
  EXPECT_EQ(agent.critic().input_dim(), 11u);
  EXPECT_EQ(agent.critic().output_dim(), 1u);
}

TEST(Ddpg, HyperParamValidationNamesField) {
  auto field_of = [](DdpgHyperParams hp) -> std::string {
    try {
      hp.validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  DdpgHyperParams hp;
  EXPECT_EQ(field_of(hp), "");
  hp.gamma = 1.5;
  EXPECT_EQ(field_of(hp), "gamma");
  hp = {};
  hp.tau = 0.0;
  EXPECT_EQ(field_of(hp), "tau");
  hp = {};
  hp.batch_size = 30000;
  EXPECT_EQ(field_of(hp), "batch_size");
}

TEST(Ddpg, GreedySelectionIsDeterministic) {
  DdpgAgent agent(8, 3, small_hp(), 2);
  const std::vector<double> s(8, 0.3);
  EXPECT_EQ(agent.select_action(s, false), agent.select_action(s, false));
  agent.set_noise_std(0.0);
  EXPECT_EQ(agent.select_action(s, true), agent.select_action(s, false));
}

TEST(Ddpg, NoisyActionsAreClipped) {
  DdpgAgent agent(8, 3, small_hp(), 3);
  agent.set_noise_std(2.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t at_bounds = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> s(8);
    for (double& v : s) v = u(rng);
    for (double a : agent.select_action(s, true)) {
      ASSERT_GE(a, 0.0);
      ASSERT_LE(a, 1.0);
      at_bounds += (a == 0.0 || a == 1.0);
    }
  }
  EXPECT_GT(at_bounds, 0u);  // the clip actually fired
}

TEST(Ddpg, CriticLossFrozenExamples) {
  DdpgHyperParams hp = small_hp();
  hp.batch_size = 1;
  DdpgAgent agent(2, 1, hp, 4);
  std::vector<Transition> batch{{{0.1, 0.2}, {0.5}, 1.0, {0.3, 0.4}}};

  // y = 1 + 0.9 * 2 = 2.8 and Q = 2.8.
  set_constant(agent.mutable_target_critic(), 2.0);
  set_constant(agent.mutable_critic(), 2.8);
  EXPECT_NEAR(agent.critic_update(ptrs(batch)), 0.0, 1e-24);

  // y = 1 + 0.9 * 0, Q = 0.
  set_constant(agent.mutable_target_critic(), 0.0);
  set_constant(agent.mutable_critic(), 0.0);
  EXPECT_DOUBLE_EQ(agent.critic_update(ptrs(batch)), 1.0);
}

TEST(Ddpg, CriticOverfitsFrozenBatch) {
  DdpgAgent agent(6, 3, small_hp(), 5);
  std::mt19937_64 rng(5);
  const auto batch = random_batch(rng, 16, 6, 3);
  double prev = agent.critic_update(ptrs(batch));
  const double first = prev;
  for (int i = 0; i < 100; ++i) {
    const double loss = agent.critic_update(ptrs(batch));
    EXPECT_LE(loss, prev * (1.0 + 1e-9)) << "step " << i;
    prev = loss;
  }
  EXPECT_LT(prev, first);
}

TEST(Ddpg, ActorIgnoredActionGivesNoUpdate) {
  DdpgAgent agent(4, 2, small_hp(), 6);
  // Zero the critic's first-layer columns that read the action block.
  agent.mutable_critic().mutable_weight(0).rightCols(2).setZero();
  const Mlp before = agent.actor();
  std::mt19937_64 rng(6);
  const auto batch = random_batch(rng, 8, 4, 2);
  agent.actor_update(ptrs(batch));
  EXPECT_EQ(agent.actor(), before);
}

TEST(Ddpg, ActorConvergesToQuadraticOptimum) {
  // Fit the critic to Q(s, a) = -(a - 0.3)^2 with gamma = 0, then train the
  // actor against it: the maximizer is a = 0.3 for every state.
  DdpgHyperParams hp;
  hp.hidden = {32, 32};
  hp.gamma = 0.0;
  hp.critic_lr = 1e-3;
  hp.actor_lr = 1e-3;
  hp.batch_size = 64;
  hp.critic_output_scale = 1.0;
  DdpgAgent agent(1, 1, hp, 7);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int step = 0; step < 3000; ++step) {
    std::vector<Transition> batch(64);
    for (Transition& t : batch) {
      const double a = u(rng);
      t = {{u(rng)}, {a}, -(a - 0.3) * (a - 0.3), {u(rng)}};
    }
    agent.critic_update(ptrs(batch));
  }
  for (int step = 0; step < 1500; ++step) {
    std::vector<Transition> batch(64);
    for (Transition& t : batch) t = {{u(rng)}, {0.0}, 0.0, {0.0}};
    agent.actor_update(ptrs(batch));
  }
  for (double s : {0.0, 0.25, 0.5, 0.75, 1.0})
    EXPECT_NEAR(agent.select_action(std::vector<double>{s}, false)[0], 0.3, 0.05) << "s = " << s;
}

TEST(Ddpg, ActorAscendsFrozenCritic) {
  DdpgHyperParams hp = small_hp();
  hp.critic_output_scale = 1.0;
  DdpgAgent agent(5, 2, hp, 8);
  std::mt19937_64 rng(8);
  const auto batch = random_batch(rng, 32, 5, 2);
  const Mlp critic = agent.critic();
  double prev = agent.actor_update(ptrs(batch));
  const double first = prev;
  for (int i = 0; i < 100; ++i) {
    const double q = agent.actor_update(ptrs(batch));
    EXPECT_GE(q, prev - 1e-9 * std::abs(prev)) << "step " << i;
    prev = q;
  }
  EXPECT_GT(prev, first);
  EXPECT_EQ(agent.critic(), critic);
}

TEST(Ddpg, SoftUpdateArithmetic) {
  DdpgHyperParams hp = small_hp();
  hp.tau = 0.001;
  DdpgAgent agent(3, 1, hp, 9);
  for (double& v : agent.mutable_target_actor().mutable_params()) v = 0.0;
  for (double& v : agent.mutable_actor().mutable_params()) v = 1.0;
  agent.soft_update();
  for (double v : agent.target_actor().params()) EXPECT_DOUBLE_EQ(v, 0.001);

  hp.tau = 1.0;
  DdpgAgent full(3, 1, hp, 9);
  for (double& v : full.mutable_actor().mutable_params()) v += 0.5;
  for (double& v : full.mutable_critic().mutable_params()) v -= 0.25;
  full.soft_update();
  EXPECT_EQ(full.target_actor(), full.actor());
  EXPECT_EQ(full.target_critic(), full.critic());
}

TEST(Ddpg, SoftUpdateConvergesGeometricallyWithBoundedDrift) {
  DdpgHyperParams hp = small_hp();
  hp.tau = 0.05;
  DdpgAgent agent(3, 1, hp, 10);
  for (double& v : agent.mutable_actor().mutable_params()) v += 1.0;
  auto gap = [&] {
    double g = 0.0;
    for (std::size_t i = 0; i < agent.actor().num_params(); ++i)
      g = std::max(g, std::abs(agent.actor().params()[i] - agent.target_actor().params()[i]));
    return g;
  };
  const double g0 = gap();
  for (int k = 1; k <= 100; ++k) {
    const std::vector<double> before(agent.target_actor().params().begin(), agent.target_actor().params().end());
    const double bound = hp.tau * gap();
    agent.soft_update();
    double drift = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i)
      drift = std::max(drift, std::abs(agent.target_actor().params()[i] - before[i]));
    EXPECT_LE(drift, bound * (1.0 + 1e-12));
    EXPECT_NEAR(gap(), g0 * std::pow(1.0 - hp.tau, k), 1e-12);
  }
}

TEST(Ddpg, WarmUpSkipsUpdates) {
  EnvConfig cfg;
  cfg.steps_per_episode = 10;
  DdpgHyperParams hp = small_hp();
  hp.batch_size = 64;
  DdpgAgent agent(state_dim(3), action_dim(3), hp, 11);
  const FlatWeights before = agent.export_weights();
  FranEnv env(cfg);
  const EpisodeReport rep = agent.train_episode(env);
  EXPECT_EQ(rep.updates, 0u);
  EXPECT_EQ(rep.steps, 10u);
  EXPECT_EQ(rep.mean_loss, 0.0);
  EXPECT_EQ(agent.export_weights(), before);
  EXPECT_EQ(agent.buffer().size(), 10u);
}

TEST(Ddpg, NoiseDecaysOncePerEpisodeToFloor) {
  EnvConfig cfg;
  cfg.steps_per_episode = 2;
  DdpgHyperParams hp = small_hp();
  hp.noise_std_initial = 0.2;
  hp.noise_decay = 0.5;
  hp.noise_floor = 0.03;
  DdpgAgent agent(state_dim(3), action_dim(3), hp, 12);
  FranEnv env(cfg);
  agent.train_episode(env);
  EXPECT_DOUBLE_EQ(agent.noise_std(), 0.1);
  agent.train_episode(env);
  EXPECT_DOUBLE_EQ(agent.noise_std(), 0.05);
  agent.train_episode(env);
  EXPECT_DOUBLE_EQ(agent.noise_std(), 0.03);
}

TEST(Ddpg, StoresRawActions) {
  EnvConfig cfg;
  cfg.steps_per_episode = 20;
  DdpgHyperParams hp = small_hp();
  hp.noise_std_initial = 0.3;
  DdpgAgent agent(state_dim(3), action_dim(3), hp, 13);
  FranEnv env(cfg);
  agent.train_episode(env);
  bool fractional_x = false;
  for (std::size_t i = 0; i < agent.buffer().size(); ++i) {
    const auto& a = agent.buffer()[i].action;
    ASSERT_EQ(a.size(), 9u);
    for (std::size_t m = 0; m < 3; ++m) fractional_x |= (a[m] != 0.0 && a[m] != 1.0);
  }
  EXPECT_TRUE(fractional_x);
}

TEST(Ddpg, EpisodesAreReproducible) {
  EnvConfig cfg;
  cfg.steps_per_episode = 30;
  auto run = [&] {
    DdpgAgent agent(state_dim(3), action_dim(3), small_hp(), 14);
    FranEnv env(cfg);
    std::vector<double> out;
    for (int e = 0; e < 3; ++e) {
      const EpisodeReport r = agent.train_episode(env);
      out.push_back(r.reward_sum);
      out.push_back(r.mean_loss);
    }
    const FlatWeights w = agent.export_weights();
    out.insert(out.end(), w.values.begin(), w.values.end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Ddpg, DimensionMismatchRejected) {
  EnvConfig cfg;
  cfg.mds_per_fap = 2;
  DdpgAgent agent(state_dim(3), action_dim(3), small_hp(), 15);
  FranEnv env(cfg);
  EXPECT_THROW(agent.train_episode(env), ShapeError);
  EXPECT_THROW(agent.select_action(std::vector<double>(4, 0.0), false), ShapeError);
}

TEST(Ddpg, SharedWeightsRoundTripAndResyncTargets) {
  DdpgAgent a(8, 3, small_hp(), 16);
  DdpgAgent b(8, 3, small_hp(), 17);
  b.import_shared(a.export_shared());
  EXPECT_EQ(b.actor(), a.actor());
  EXPECT_EQ(b.critic(), a.critic());
  EXPECT_EQ(b.target_actor(), a.actor());
  EXPECT_EQ(b.target_critic(), a.critic());

  DdpgAgent c(8, 3, small_hp(), 18);
  for (double& v : a.mutable_target_actor().mutable_params()) v *= 0.5;
  c.import_weights(a.export_weights());
  EXPECT_EQ(c.export_weights(), a.export_weights());

  DdpgAgent wrong(7, 3, small_hp(), 19);
  EXPECT_THROW(wrong.import_shared(a.export_shared()), ShapeError);
}

TEST(Ddpg, LearnsToStayLocalWhenOffloadingIsDominated) {
  // One MD with a hopeless uplink: huge noise power makes the rate tiny.
  EnvConfig cfg;
  cfg.num_faps = 1;
  cfg.mds_per_fap = 1;
  cfg.noise_power = 1e-3;
  cfg.steps_per_episode = 50;
  FranEnv probe(cfg);
  probe.reset(1);
  const auto best = oracle_slot_optimum(probe.state(), probe.fap(), cfg);
  ASSERT_EQ(best.action.offload[0], 0) << "offloading should be dominated on this instance";

  DdpgAgent agent(state_dim(1), action_dim(1), DdpgHyperParams{}, 20);
  FranEnv env(cfg, 0);
  for (int e = 0; e < 100; ++e) agent.train_episode(env);

  std::size_t local = 0, slots = 0;
  FranEnv eval(cfg, 0);
  for (std::uint64_t seed = 1000; seed < 1004; ++seed) {
    eval.reset(seed);
    while (!eval.done()) {
      const auto raw = agent.select_action(eval.observation(), false);
      const ActionVector a = sanitize_action(raw, 1);
      const auto oracle = oracle_slot_optimum(eval.state(), eval.fap(), cfg);
      ASSERT_EQ(oracle.action.offload[0], 0);
      local += a.offload[0] == 0;
      ++slots;
      eval.step(a);
    }
  }
  EXPECT_GE(static_cast<double>(local) / static_cast<double>(slots), 0.95);
}
