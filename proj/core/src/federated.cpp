#include "fran/federated.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>

#include "fran/checkpoint.hpp"
#include "fran/seed.hpp"

namespace fran {

namespace {

constexpr std::array<char, 4> kRoundMagic{'F', 'R', 'R', 'D'};
constexpr std::uint32_t kRoundVersion = 1;

// Seed streams derived from TrainingConfig::seed.
constexpr std::uint64_t kGlobalInitStream = 100;
constexpr std::uint64_t kAgentStream = 200;
constexpr std::uint64_t kEnvStream = 300;
constexpr std::uint64_t kRoundEvalStream = 400;

std::string checkpoint_name(std::uint64_t round) {
  std::string digits = std::to_string(round);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "round_" + digits + ".ckpt";
}

template <typename Agent, typename MakeAgent>
TrainingResult train_federated(const TrainingConfig& config, MakeAgent make_agent,
                               const RoundCallback& on_round) {
  const int n_faps = config.env.num_faps;
  EnvConfig env_cfg = config.env;
  env_cfg.rng_seed = mix_seed(config.seed, kEnvStream);

  TrainingResult result;
  GlobalModel& global = result.final_model;
  global.kind = config.kind;
  global.weights = make_agent(mix_seed(config.seed, kGlobalInitStream)).export_shared();

  std::vector<Agent> agents;
  std::vector<FranEnv> envs;
  agents.reserve(static_cast<std::size_t>(n_faps));
  envs.reserve(static_cast<std::size_t>(n_faps));
  for (int n = 0; n < n_faps; ++n) {
    agents.push_back(make_agent(mix_seed(config.seed, kAgentStream + static_cast<std::uint64_t>(n))));
    agents.back().import_shared(global.weights);
    envs.emplace_back(env_cfg, n);
  }

  if (config.checkpoint_dir) std::filesystem::create_directories(*config.checkpoint_dir);
  const std::uint64_t eval_root = round_eval_root(config.seed);
  for (std::size_t j = 0; j < config.rounds; ++j) {
    RoundReport rep = run_round<Agent>(agents, envs, global, config.episodes_per_round, config.parallel);
    rep.eval = evaluate(config.env, learned_policy(global, config), eval_root,
                        config.eval_episodes_per_round);
    if (config.checkpoint_dir && config.checkpoint_every > 0 &&
        (global.round % config.checkpoint_every == 0 || j + 1 == config.rounds))
      save_round_checkpoint(*config.checkpoint_dir / checkpoint_name(global.round), global);
    if (on_round) on_round(rep);
    result.rounds.push_back(std::move(rep));
  }
  return result;
}

}  // namespace

std::uint64_t round_eval_root(std::uint64_t training_seed) {
  return mix_seed(training_seed, kRoundEvalStream);
}

const char* to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::ddpg: return "ddpg";
    case AgentKind::dqn: return "dqn";
  }
  return "unknown";
}

FlatWeights federated_average(std::span<const FlatWeights> locals) {
  if (locals.empty()) throw ShapeError("federated_average: no uploads");
  const FlatWeights& ref = locals.front();
  for (const FlatWeights& w : locals)
    if (!w.same_layout(ref) || w.values.size() != ref.values.size())
      throw ShapeError("federated_average: layout mismatch between uploads");

  // Mean as ref + mean(x - ref): exact on consensus, identical otherwise to rounding.
  FlatWeights out = ref;
  const double inv_n = 1.0 / static_cast<double>(locals.size());
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    double delta = 0.0;
    for (std::size_t k = 1; k < locals.size(); ++k) delta += locals[k].values[i] - ref.values[i];
    out.values[i] = ref.values[i] + delta * inv_n;
  }
  return out;
}

void TrainingConfig::validate() const {
  env.validate();
  ddpg.validate();
  dqn.validate();
  if (rounds == 0) throw ConfigError("rounds", "must be >= 1");
}

TrainingResult run_training(const TrainingConfig& config, const RoundCallback& on_round) {
  config.validate();
  const auto m = static_cast<std::size_t>(config.env.mds_per_fap);
  switch (config.kind) {
    case AgentKind::ddpg:
      return train_federated<DdpgAgent>(
          config,
          [&](std::uint64_t seed) { return DdpgAgent(state_dim(m), action_dim(m), config.ddpg, seed); },
          on_round);
    case AgentKind::dqn:
      return train_federated<DqnAgent>(
          config, [&](std::uint64_t seed) { return DqnAgent(m, config.dqn, seed); }, on_round);
  }
  throw ConfigError("agent", "unknown agent kind");
}

PolicyFactory learned_policy(const GlobalModel& model, const TrainingConfig& config) {
  const auto m = static_cast<std::size_t>(config.env.mds_per_fap);
  switch (model.kind) {
    case AgentKind::ddpg: {
      const std::size_t layers = config.ddpg.hidden.size() + 1;
      const std::array<std::size_t, 2> counts{layers, layers};
      auto actor = std::make_shared<const Mlp>(unflatten(split(model.weights, counts)[0]));
      if (actor->input_dim() != state_dim(m) || actor->output_dim() != action_dim(m))
        throw ShapeError("learned_policy: actor does not match the environment");
      return [actor](int) -> Policy {
        return [actor](const FranEnv& env) {
          std::vector<double> raw = predict(*actor, env.observation());
          for (double& v : raw) v = std::clamp(v, 0.0, 1.0);
          return sanitize_action(raw, env.num_mds());
        };
      };
    }
    case AgentKind::dqn: {
      auto net = std::make_shared<const Mlp>(unflatten(model.weights));
      const DiscreteActionTable table(m);
      if (net->input_dim() != state_dim(m) || net->output_dim() != table.output_width())
        throw ShapeError("learned_policy: Q network does not match the environment");
      return [net, table](int) -> Policy {
        return [net, table](const FranEnv& env) {
          const std::vector<double> q = predict(*net, env.observation());
          const std::size_t per = DiscreteActionTable::kPerMd;
          std::vector<std::size_t> idx(table.num_mds());
          for (std::size_t h = 0; h < idx.size(); ++h) {
            std::size_t best = 0;
            for (std::size_t a = 1; a < per; ++a)
              if (q[h * per + a] > q[h * per + best]) best = a;
            idx[h] = best;
          }
          return sanitize_action(table.decode(idx), env.num_mds());
        };
      };
    }
  }
  throw ConfigError("agent", "unknown agent kind");
}

void write_round_checkpoint(std::ostream& out, const GlobalModel& model) {
  out.write(kRoundMagic.data(), kRoundMagic.size());
  le::put_u32(out, kRoundVersion);
  le::put_u64(out, model.round);
  le::put_u8(out, static_cast<std::uint8_t>(model.kind));
  le::put_u64(out, model.weights.layout_hash());
  write_checkpoint(out, model.weights);
}

GlobalModel read_round_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kRoundMagic) throw ShapeError("round checkpoint: bad magic");
  if (le::get_u32(in) != kRoundVersion) throw ShapeError("round checkpoint: unsupported version");
  GlobalModel model;
  model.round = le::get_u64(in);
  const std::uint8_t kind = le::get_u8(in);
  if (kind > static_cast<std::uint8_t>(AgentKind::dqn))
    throw ShapeError("round checkpoint: unknown agent kind");
  model.kind = static_cast<AgentKind>(kind);
  const std::uint64_t hash = le::get_u64(in);
  model.weights = read_checkpoint(in);
  if (model.weights.layout_hash() != hash) throw ShapeError("round checkpoint: layout hash mismatch");
  return model;
}

void save_round_checkpoint(const std::filesystem::path& path, const GlobalModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("round checkpoint: cannot open " + path.string());
  write_round_checkpoint(out, model);
}

GlobalModel load_round_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("round checkpoint: cannot open " + path.string());
  return read_round_checkpoint(in);
}

}  // namespace fran
