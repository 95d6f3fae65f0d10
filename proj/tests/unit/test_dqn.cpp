#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fran/dqn.hpp"
#include "fran/errors.hpp"

using namespace fran;

namespace {

DqnHyperParams small_hp() {
  DqnHyperParams hp;
  hp.hidden = {16, 8};
  hp.batch_size = 8;
  hp.replay_capacity = 500;
  return hp;
}

std::vector<const DqnTransition*> ptrs(const std::vector<DqnTransition>& ts) {
  std::vector<const DqnTransition*> out;
  for (const DqnTransition& t : ts) out.push_back(&t);
  return out;
}

}  // namespace

TEST(DiscreteActionTable, Sizes) {
  // 1 local entry plus 5 compute levels times 5 bandwidth levels.
  EXPECT_EQ(DiscreteActionTable::kPerMd, 26u);
  EXPECT_EQ(DiscreteActionTable(3).output_width(), 78u);
  DqnAgent agent(3, small_hp(), 1);
  EXPECT_EQ(agent.online().output_dim(), 78u);
  EXPECT_EQ(agent.online().input_dim(), state_dim(3));
}

TEST(DiscreteActionTable, DecodeExamples) {
  const DiscreteActionTable table(1);
  EXPECT_EQ(table.decode(std::vector<std::size_t>{0}), (std::vector<double>{0.0, 0.0, 0.0}));
  const auto raw = table.decode(std::vector<std::size_t>{DiscreteActionTable::offload_index(3, 5)});
  EXPECT_EQ(raw[0], 1.0);
  EXPECT_NEAR(raw[1], 0.6, 1e-15);
  EXPECT_NEAR(raw[2], 1.0, 1e-15);
}

TEST(DiscreteActionTable, AllAtTopLevelShareEvenly) {
  const DiscreteActionTable table(5);
  const std::size_t top = DiscreteActionTable::offload_index(5, 5);
  const ActionVector a = sanitize_action(table.decode(std::vector<std::size_t>(5, top)), 5);
  for (double y : a.compute_share) EXPECT_NEAR(y, 0.2, 1e-15);
  for (double z : a.bandwidth_share) EXPECT_NEAR(z, 0.2, 1e-15);
}

TEST(DiscreteActionTable, EveryIndexDecodesToSanitizableAction) {
  const DiscreteActionTable table(2);
  for (std::size_t i = 0; i < DiscreteActionTable::kPerMd; ++i) {
    for (std::size_t j = 0; j < DiscreteActionTable::kPerMd; ++j) {
      const std::vector<std::size_t> idx{i, j};
      const auto raw = table.decode(idx);
      const ActionVector a = sanitize_action(raw, 2);
      EXPECT_NO_THROW(validate_action(a, 2));
      EXPECT_EQ(table.encode(raw), idx);
    }
  }
}

TEST(DiscreteActionTable, OutOfRangeRejected) {
  const DiscreteActionTable table(2);
  EXPECT_THROW(table.decode(std::vector<std::size_t>{0, 26}), ShapeError);
  EXPECT_THROW(table.decode(std::vector<std::size_t>{0}), ShapeError);
  EXPECT_THROW(DiscreteActionTable::offload_index(0, 1), ShapeError);
  EXPECT_THROW(DiscreteActionTable::offload_index(1, 6), ShapeError);
}

TEST(Dqn, GreedySelectionIsArgmaxPerHead) {
  DqnAgent agent(2, small_hp(), 2);
  const std::vector<double> s(state_dim(2), 0.4);
  const auto q = predict(agent.online(), s);
  const auto idx = agent.select(s, 0.0);
  for (std::size_t h = 0; h < 2; ++h) {
    std::size_t best = 0;
    for (std::size_t a = 0; a < 26; ++a)
      if (q[h * 26 + a] > q[h * 26 + best]) best = a;
    EXPECT_EQ(idx[h], best);
  }
  EXPECT_EQ(agent.select(s, 0.0), idx);
}

TEST(Dqn, TiesBreakToLowestIndex) {
  DqnAgent agent(2, small_hp(), 3);
  for (double& v : agent.mutable_online().mutable_params()) v = 0.0;
  const std::vector<double> s(state_dim(2), 0.4);
  EXPECT_EQ(agent.select(s, 0.0), (std::vector<std::size_t>{0, 0}));
  // Head 1 gets two equal maxima at indices 7 and 12.
  agent.mutable_online().mutable_bias(agent.online().num_layers() - 1)(26 + 7) = 1.0;
  agent.mutable_online().mutable_bias(agent.online().num_layers() - 1)(26 + 12) = 1.0;
  EXPECT_EQ(agent.select(s, 0.0), (std::vector<std::size_t>{0, 7}));
}

TEST(Dqn, ArgmaxInvariantUnderPositiveAffineTransform) {
  DqnAgent agent(2, small_hp(), 4);
  const std::vector<double> s(state_dim(2), 0.1);
  const auto before = agent.select(s, 0.0);
  const std::size_t last = agent.online().num_layers() - 1;
  auto w = agent.mutable_online().mutable_weight(last);
  auto b = agent.mutable_online().mutable_bias(last);
  w *= 3.5;
  b = 3.5 * b + Eigen::VectorXd::Constant(b.size(), -2.0);
  EXPECT_EQ(agent.select(s, 0.0), before);
}

TEST(Dqn, FullExplorationIsUniform) {
  DqnAgent agent(1, small_hp(), 5);
  const std::vector<double> s(state_dim(1), 0.5);
  constexpr int kDraws = 100000;
  std::vector<int> counts(26, 0);
  for (int i = 0; i < kDraws; ++i) ++counts[agent.select(s, 1.0)[0]];
  const double p = 1.0 / 26.0;
  const double sigma = std::sqrt(kDraws * p * (1 - p));
  for (int c : counts) EXPECT_LE(std::abs(c - kDraws * p), 3.0 * sigma);
}

TEST(Dqn, ZeroDiscountTargetIsReward) {
  DqnHyperParams hp = small_hp();
  hp.gamma = 0.0;
  DqnAgent agent(1, hp, 6);
  const std::vector<double> s(state_dim(1), 0.2);
  const std::vector<DqnTransition> batch{{s, {4}, -0.7, s}};
  const double q = predict(agent.online(), s)[4];
  EXPECT_NEAR(agent.td_update(ptrs(batch)), (q + 0.7) * (q + 0.7), 1e-14);
}

TEST(Dqn, LossSumsHeadsAndAveragesBatch) {
  DqnHyperParams hp = small_hp();
  hp.gamma = 0.9;
  DqnAgent agent(2, hp, 7);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DqnTransition> batch(4);
  for (DqnTransition& t : batch) {
    t.state.resize(state_dim(2));
    t.next_state.resize(state_dim(2));
    for (double& v : t.state) v = u(rng);
    for (double& v : t.next_state) v = u(rng);
    t.indices = {static_cast<std::size_t>(u(rng) * 26), static_cast<std::size_t>(u(rng) * 26)};
    t.reward = -u(rng);
  }
  double expected = 0.0;
  for (const DqnTransition& t : batch) {
    const auto q = predict(agent.online(), t.state);
    const auto qn = predict(agent.target(), t.next_state);
    for (std::size_t h = 0; h < 2; ++h) {
      double best = qn[h * 26];
      for (std::size_t a = 1; a < 26; ++a) best = std::max(best, qn[h * 26 + a]);
      const double d = q[h * 26 + t.indices[h]] - (t.reward + 0.9 * best);
      expected += d * d;
    }
  }
  EXPECT_NEAR(agent.td_update(ptrs(batch)), expected / 4.0, 1e-12);
}

TEST(Dqn, OverfitsFrozenBatch) {
  DqnHyperParams hp = small_hp();
  DqnAgent agent(2, hp, 8);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DqnTransition> batch(16);
  for (DqnTransition& t : batch) {
    t.state.resize(state_dim(2));
    t.next_state.resize(state_dim(2));
    for (double& v : t.state) v = u(rng);
    for (double& v : t.next_state) v = u(rng);
    t.indices = {static_cast<std::size_t>(u(rng) * 26), static_cast<std::size_t>(u(rng) * 26)};
    t.reward = -u(rng);
  }
  double prev = agent.td_update(ptrs(batch));
  const double first = prev;
  for (int i = 0; i < 100; ++i) {
    const double loss = agent.td_update(ptrs(batch));
    EXPECT_LE(loss, prev * (1.0 + 1e-9)) << "step " << i;
    prev = loss;
  }
  EXPECT_LT(prev, first);
}

TEST(Dqn, TargetSyncCopiesOnline) {
  DqnAgent agent(2, small_hp(), 9);
  for (double& v : agent.mutable_online().mutable_params()) v += 0.1;
  EXPECT_FALSE(agent.target() == agent.online());
  agent.sync_target();
  const std::vector<double> s(state_dim(2), 0.3);
  EXPECT_EQ(predict(agent.target(), s), predict(agent.online(), s));
}

TEST(Dqn, EpsilonDecaysPerEpisode) {
  EnvConfig cfg;
  cfg.steps_per_episode = 5;
  DqnHyperParams hp = small_hp();
  hp.epsilon_decay = 0.5;
  hp.epsilon_floor = 0.2;
  DqnAgent agent(3, hp, 10);
  FranEnv env(cfg);
  EXPECT_EQ(agent.epsilon(), 1.0);
  agent.train_episode(env);
  EXPECT_EQ(agent.epsilon(), 0.5);
  agent.train_episode(env);
  EXPECT_EQ(agent.epsilon(), 0.25);
  agent.train_episode(env);
  EXPECT_EQ(agent.epsilon(), 0.2);
}

TEST(Dqn, EpisodesAreReproducible) {
  EnvConfig cfg;
  cfg.steps_per_episode = 30;
  auto run = [&] {
    DqnAgent agent(3, small_hp(), 11);
    FranEnv env(cfg);
    std::vector<double> out;
    for (int e = 0; e < 3; ++e) out.push_back(agent.train_episode(env).reward_sum);
    const FlatWeights w = agent.export_shared();
    out.insert(out.end(), w.values.begin(), w.values.end());
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Dqn, SharedWeightsRoundTrip) {
  DqnAgent a(2, small_hp(), 12), b(2, small_hp(), 13);
  b.import_shared(a.export_shared());
  EXPECT_EQ(b.online(), a.online());
  EXPECT_EQ(b.target(), a.online());
  DqnAgent wrong(3, small_hp(), 14);
  EXPECT_THROW(wrong.import_shared(a.export_shared()), ShapeError);
}
