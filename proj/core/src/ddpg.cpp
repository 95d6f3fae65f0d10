#include "fran/ddpg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fran/errors.hpp"
#include "fran/seed.hpp"

namespace fran {

namespace {

struct Batch {
  Eigen::MatrixXd state;
  Eigen::MatrixXd action;
  Eigen::RowVectorXd reward;
  Eigen::MatrixXd next_state;
};

Batch gather(std::span<const Transition* const> batch, std::size_t state_dim,
             std::size_t action_dim) {
  const auto k = static_cast<Eigen::Index>(batch.size());
  Batch b;
  b.state.resize(static_cast<Eigen::Index>(state_dim), k);
  b.action.resize(static_cast<Eigen::Index>(action_dim), k);
  b.reward.resize(k);
  b.next_state.resize(static_cast<Eigen::Index>(state_dim), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Transition& t = *batch[static_cast<std::size_t>(i)];
    if (t.state.size() != state_dim || t.next_state.size() != state_dim ||
        t.action.size() != action_dim)
      throw ShapeError("transition dimensions do not match the agent");
    b.state.col(i) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), b.state.rows());
    b.action.col(i) = Eigen::Map<const Eigen::VectorXd>(t.action.data(), b.action.rows());
    b.reward(i) = t.reward;
    b.next_state.col(i) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), b.state.rows());
  }
  return b;
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

void blend(Mlp& target, const Mlp& online, double tau) {
  std::span<double> t = target.mutable_params();
  std::span<const double> o = online.params();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = tau * o[i] + (1.0 - tau) * t[i];
}

}  // namespace

void DdpgHyperParams::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must lie in [0,1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau", "must lie in (0,1]");
  if (batch_size == 0) throw ConfigError("batch_size", "must be >= 1");
  if (batch_size > replay_capacity) throw ConfigError("batch_size", "exceeds replay_capacity");
  if (!(actor_lr > 0.0)) throw ConfigError("actor_lr", "must be > 0");
  if (!(critic_lr > 0.0)) throw ConfigError("critic_lr", "must be > 0");
  if (!(noise_std_initial >= 0.0)) throw ConfigError("noise_std_initial", "must be >= 0");
  if (!(noise_decay > 0.0 && noise_decay <= 1.0)) throw ConfigError("noise_decay", "must lie in (0,1]");
  if (!(noise_floor >= 0.0)) throw ConfigError("noise_floor", "must be >= 0");
}

DdpgAgent::DdpgAgent(std::size_t state_dim, std::size_t action_dim, DdpgHyperParams hp,
                     std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      hp_(std::move(hp)),
      buffer_(hp_.replay_capacity),
      rng_(mix_seed(seed, 3)),
      noise_std_(hp_.noise_std_initial) {
  hp_.validate();
  Topology actor_topo{state_dim, hp_.hidden, action_dim, Activation::relu, Activation::sigmoid,
                      hp_.actor_output_scale};
  Topology critic_topo{state_dim + action_dim, hp_.hidden, 1, Activation::relu, Activation::linear,
                       hp_.critic_output_scale};
  actor_ = init_mlp(mix_seed(seed, 1), actor_topo);
  critic_ = init_mlp(mix_seed(seed, 2), critic_topo);
  target_actor_ = actor_;
  target_critic_ = critic_;
  actor_opt_ = AdamState(actor_.num_params(), hp_.actor_lr);
  critic_opt_ = AdamState(critic_.num_params(), hp_.critic_lr);
}

std::vector<double> DdpgAgent::select_action(std::span<const double> state, bool explore) {
  if (state.size() != state_dim_) throw ShapeError("select_action: state dimension mismatch");
  std::vector<double> a = predict(actor_, state);
  if (explore && noise_std_ > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std_);
    for (double& v : a) v += noise(rng_);
  }
  for (double& v : a) v = std::clamp(v, 0.0, 1.0);
  return a;
}

std::vector<const Transition*> DdpgAgent::sample_batch() {
  return buffer_.sample(hp_.batch_size, rng_);
}

double DdpgAgent::critic_update(std::span<const Transition* const> batch) {
  if (batch.empty()) throw ShapeError("critic_update: empty batch");
  const Batch b = gather(batch, state_dim_, action_dim_);
  const double k = static_cast<double>(batch.size());

  const Eigen::MatrixXd next_action = predict(target_actor_, b.next_state);
  const Eigen::MatrixXd next_q = predict(target_critic_, stack(b.next_state, next_action));
  const Eigen::RowVectorXd target = b.reward + hp_.gamma * next_q.row(0);

  ForwardPass pass = forward(critic_, stack(b.state, b.action));
  const Eigen::RowVectorXd diff = pass.output.row(0) - target;
  const double loss = diff.squaredNorm() / k;
  if (!std::isfinite(loss)) throw NumericError("critic_update: non-finite loss");

  const Eigen::MatrixXd grad_out = (2.0 / k) * diff;
  const Gradients g = backward(critic_, pass.cache, grad_out);
  adam_step(critic_, g.params, critic_opt_);
  return loss;
}

double DdpgAgent::actor_update(std::span<const Transition* const> batch) {
  if (batch.empty()) throw ShapeError("actor_update: empty batch");
  const Batch b = gather(batch, state_dim_, action_dim_);
  const double k = static_cast<double>(batch.size());

  ForwardPass actor_pass = forward(actor_, b.state);
  ForwardPass critic_pass = forward(critic_, stack(b.state, actor_pass.output));
  const double objective = critic_pass.output.row(0).sum() / k;
  if (!std::isfinite(objective)) throw NumericError("actor_update: non-finite objective");

  // Ascent on mean Q is descent on -mean Q.
  const Eigen::MatrixXd grad_q = Eigen::MatrixXd::Constant(1, b.state.cols(), -1.0 / k);
  const Gradients critic_grad = backward(critic_, critic_pass.cache, grad_q);
  const Eigen::MatrixXd grad_action =
      critic_grad.input.bottomRows(static_cast<Eigen::Index>(action_dim_));
  const Gradients actor_grad = backward(actor_, actor_pass.cache, grad_action);
  adam_step(actor_, actor_grad.params, actor_opt_);
  return objective;
}

void DdpgAgent::soft_update() {
  blend(target_actor_, actor_, hp_.tau);
  blend(target_critic_, critic_, hp_.tau);
}

EpisodeReport DdpgAgent::train_episode(FranEnv& env) {
  if (fran::state_dim(env.num_mds()) != state_dim_ || fran::action_dim(env.num_mds()) != action_dim_)
    throw ShapeError("train_episode: environment dimensions do not match the agent");
  EpisodeReport report;
  env.reset();
  double loss_sum = 0.0;
  while (!env.done()) {
    std::vector<double> state = env.observation();
    std::vector<double> action = select_action(state, true);
    const StepResult step = env.step_raw(action);
    report.reward_sum += step.reward;
    report.mean_cost += step.cost.cost;
    report.mean_delay += step.cost.total_delay;
    report.mean_energy += step.cost.total_energy;
    ++report.steps;
    store({std::move(state), std::move(action), step.reward, env.observation()});

    if (buffer_.size() >= hp_.batch_size) {
      const std::vector<const Transition*> batch = sample_batch();
      loss_sum += critic_update(batch);
      actor_update(batch);
      soft_update();
      ++report.updates;
    }
  }
  const double n = static_cast<double>(report.steps);
  report.mean_cost /= n;
  report.mean_delay /= n;
  report.mean_energy /= n;
  report.mean_loss = report.updates ? loss_sum / static_cast<double>(report.updates) : 0.0;
  noise_std_ = std::max(noise_std_ * hp_.noise_decay, hp_.noise_floor);
  return report;
}

FlatWeights DdpgAgent::export_shared() const {
  const std::array<FlatWeights, 2> parts{flatten(actor_), flatten(critic_)};
  return concat(parts);
}

void DdpgAgent::import_shared(const FlatWeights& weights) {
  const std::array<std::size_t, 2> counts{actor_.num_layers(), critic_.num_layers()};
  std::vector<FlatWeights> parts = split(weights, counts);
  if (parts[0].layout != actor_.layout() || parts[1].layout != critic_.layout())
    throw ShapeError("import_shared: layout does not match this agent");
  actor_ = unflatten(parts[0]);
  critic_ = unflatten(parts[1]);
  target_actor_ = actor_;
  target_critic_ = critic_;
}

FlatWeights DdpgAgent::export_weights() const {
  const std::array<FlatWeights, 4> parts{flatten(actor_), flatten(critic_), flatten(target_actor_),
                                         flatten(target_critic_)};
  return concat(parts);
}

void DdpgAgent::import_weights(const FlatWeights& weights) {
  const std::array<std::size_t, 4> counts{actor_.num_layers(), critic_.num_layers(),
                                          actor_.num_layers(), critic_.num_layers()};
  std::vector<FlatWeights> parts = split(weights, counts);
  if (parts[0].layout != actor_.layout() || parts[1].layout != critic_.layout() ||
      parts[2].layout != actor_.layout() || parts[3].layout != critic_.layout())
    throw ShapeError("import_weights: layout does not match this agent");
  actor_ = unflatten(parts[0]);
  critic_ = unflatten(parts[1]);
  target_actor_ = unflatten(parts[2]);
  target_critic_ = unflatten(parts[3]);
}

}  // namespace fran
