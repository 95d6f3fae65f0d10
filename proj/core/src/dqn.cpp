#include "fran/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fran/errors.hpp"
#include "fran/seed.hpp"

namespace fran {

std::size_t DiscreteActionTable::offload_index(std::size_t compute_level,
                                               std::size_t bandwidth_level) {
  if (compute_level < 1 || compute_level > kLevels || bandwidth_level < 1 ||
      bandwidth_level > kLevels)
    throw ShapeError("allocation level outside 1.." + std::to_string(kLevels));
  return 1 + (compute_level - 1) * kLevels + (bandwidth_level - 1);
}

std::vector<double> DiscreteActionTable::decode(std::span<const std::size_t> indices) const {
  if (indices.size() != num_mds_) throw ShapeError("decode: expected one index per MD");
  std::vector<double> raw(action_dim(num_mds_), 0.0);
  const double step = 1.0 / static_cast<double>(kLevels);
  for (std::size_t m = 0; m < num_mds_; ++m) {
    const std::size_t idx = indices[m];
    if (idx >= kPerMd)
      throw ShapeError("decode: index " + std::to_string(idx) + " out of range for MD " +
                       std::to_string(m));
    if (idx == 0) continue;
    const std::size_t combo = idx - 1;
    raw[m] = 1.0;
    raw[num_mds_ + m] = static_cast<double>(combo / kLevels + 1) * step;
    raw[2 * num_mds_ + m] = static_cast<double>(combo % kLevels + 1) * step;
  }
  return raw;
}

std::vector<std::size_t> DiscreteActionTable::encode(std::span<const double> raw) const {
  if (raw.size() != action_dim(num_mds_)) throw ShapeError("encode: raw action length mismatch");
  std::vector<std::size_t> out(num_mds_, 0);
  const double levels = static_cast<double>(kLevels);
  auto level = [levels](double v) {
    return static_cast<std::size_t>(std::clamp(std::lround(v * levels), 1L, static_cast<long>(levels)));
  };
  for (std::size_t m = 0; m < num_mds_; ++m) {
    if (raw[m] <= kOffloadThreshold) continue;
    out[m] = offload_index(level(raw[num_mds_ + m]), level(raw[2 * num_mds_ + m]));
  }
  return out;
}

void DqnHyperParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dqn_gamma", "must lie in [0,1]");
  if (batch_size == 0) throw ConfigError("dqn_batch_size", "must be >= 1");
  if (batch_size > replay_capacity) throw ConfigError("dqn_batch_size", "exceeds replay_capacity");
  if (!(lr > 0.0)) throw ConfigError("dqn_lr", "must be > 0");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0))
    throw ConfigError("epsilon_start", "must lie in [0,1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
    throw ConfigError("epsilon_decay", "must lie in (0,1]");
  if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0))
    throw ConfigError("epsilon_floor", "must lie in [0,1]");
  if (target_sync_steps == 0) throw ConfigError("target_sync_steps", "must be >= 1");
}

DqnAgent::DqnAgent(std::size_t num_mds, DqnHyperParams hp, std::uint64_t seed)
    : state_dim_(fran::state_dim(num_mds)),
      table_(num_mds),
      hp_(std::move(hp)),
      buffer_(hp_.replay_capacity),
      rng_(mix_seed(seed, 3)),
      epsilon_(hp_.epsilon_start) {
  hp_.validate();
  Topology topo{state_dim_, hp_.hidden, table_.output_width(), Activation::relu, Activation::linear};
  online_ = init_mlp(mix_seed(seed, 1), topo);
  target_ = online_;
  opt_ = AdamState(online_.num_params(), hp_.lr);
}

std::vector<std::size_t> DqnAgent::select(std::span<const double> state, double epsilon) {
  if (state.size() != state_dim_) throw ShapeError("select: state dimension mismatch");
  const std::vector<double> q = predict(online_, state);
  const std::size_t per = DiscreteActionTable::kPerMd;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> any(0, per - 1);
  std::vector<std::size_t> out(table_.num_mds());
  for (std::size_t h = 0; h < table_.num_mds(); ++h) {
    if (epsilon > 0.0 && coin(rng_) < epsilon) {
      out[h] = any(rng_);
      continue;
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < per; ++a)
      if (q[h * per + a] > q[h * per + best]) best = a;
    out[h] = best;
  }
  return out;
}

std::vector<double> DqnAgent::greedy_action(std::span<const double> state) {
  return table_.decode(select(state, 0.0));
}

std::vector<const DqnTransition*> DqnAgent::sample_batch() {
  return buffer_.sample(hp_.batch_size, rng_);
}

double DqnAgent::td_update(std::span<const DqnTransition* const> batch) {
  if (batch.empty()) throw ShapeError("td_update: empty batch");
  const auto k = static_cast<Eigen::Index>(batch.size());
  const auto sd = static_cast<Eigen::Index>(state_dim_);
  const std::size_t heads = table_.num_mds();
  const std::size_t per = DiscreteActionTable::kPerMd;

  Eigen::MatrixXd s(sd, k);
  Eigen::MatrixXd s_next(sd, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const DqnTransition& t = *batch[static_cast<std::size_t>(i)];
    if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ || t.indices.size() != heads)
      throw ShapeError("td_update: transition dimensions do not match the agent");
    s.col(i) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), sd);
    s_next.col(i) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), sd);
  }

  const Eigen::MatrixXd q_next = predict(target_, s_next);
  ForwardPass pass = forward(online_, s);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(pass.output.rows(), k);
  double loss = 0.0;
  const double kd = static_cast<double>(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const DqnTransition& t = *batch[static_cast<std::size_t>(i)];
    for (std::size_t h = 0; h < heads; ++h) {
      const auto base = static_cast<Eigen::Index>(h * per);
      const double best_next = q_next.col(i).segment(base, static_cast<Eigen::Index>(per)).maxCoeff();
      const double target = t.reward + hp_.gamma * best_next;
      const auto row = base + static_cast<Eigen::Index>(t.indices[h]);
      const double diff = pass.output(row, i) - target;
      loss += diff * diff;
      grad(row, i) = 2.0 * diff / kd;
    }
  }
  loss /= kd;
  if (!std::isfinite(loss)) throw NumericError("td_update: non-finite loss");
  const Gradients g = backward(online_, pass.cache, grad);
  adam_step(online_, g.params, opt_);
  return loss;
}

EpisodeReport DqnAgent::train_episode(FranEnv& env) {
  if (fran::state_dim(env.num_mds()) != state_dim_)
    throw ShapeError("train_episode: environment dimensions do not match the agent");
  EpisodeReport report;
  env.reset();
  double loss_sum = 0.0;
  while (!env.done()) {
    std::vector<double> state = env.observation();
    std::vector<std::size_t> idx = select(state, epsilon_);
    const StepResult step = env.step_raw(table_.decode(idx));
    report.reward_sum += step.reward;
    report.mean_cost += step.cost.cost;
    report.mean_delay += step.cost.total_delay;
    report.mean_energy += step.cost.total_energy;
    ++report.steps;
    store({std::move(state), std::move(idx), step.reward, env.observation()});

    if (buffer_.size() >= hp_.batch_size) {
      loss_sum += td_update(sample_batch());
      ++report.updates;
      if (++update_steps_ % hp_.target_sync_steps == 0) sync_target();
    }
  }
  const double n = static_cast<double>(report.steps);
  report.mean_cost /= n;
  report.mean_delay /= n;
  report.mean_energy /= n;
  report.mean_loss = report.updates ? loss_sum / static_cast<double>(report.updates) : 0.0;
  epsilon_ = std::max(epsilon_ * hp_.epsilon_decay, hp_.epsilon_floor);
  return report;
}

void DqnAgent::import_shared(const FlatWeights& weights) {
  if (weights.layout != online_.layout())
    throw ShapeError("import_shared: layout does not match this agent");
  online_ = unflatten(weights);
  target_ = online_;
}

}  // namespace fran
