#include "fran/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "fran/errors.hpp"

namespace fran {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    const std::string_view item = trim(s.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key), "expected a boolean, got '" + std::string(v) + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += fmt(xs[i]);
    else out += std::to_string(xs[i]);
  }
  return out;
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;  // empty: not dumped
};

#define FRAN_DOUBLE(NAME, FIELD)                                                                     \
  Key {                                                                                              \
    NAME, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.FIELD = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.FIELD); }                                       \
  }
#define FRAN_INT(NAME, FIELD, TYPE)                                                                  \
  Key {                                                                                              \
    NAME, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.FIELD = to_int<TYPE>(k, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                            \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      // experiment
      {"scenario", [](ExperimentConfig& c, std::string_view, std::string_view v) { c.scenario = v; },
       [](const ExperimentConfig& c) { return c.scenario; }},
      {"agents",
       [](ExperimentConfig& c, std::string_view, std::string_view v) {
         c.agents.clear();
         for (std::string_view name : split_list(v)) c.agents.push_back(parse_policy_kind(name));
       },
       [](const ExperimentConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.agents.size(); ++i) out += (i ? ", " : "") + std::string(to_string(c.agents[i]));
         return out;
       }},
      {"seeds",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.seeds.clear();
         for (std::string_view s : split_list(v)) c.seeds.push_back(to_int<std::uint64_t>(k, s));
       },
       [](const ExperimentConfig& c) { return join(c.seeds); }},
      {"output_dir",
       [](ExperimentConfig& c, std::string_view, std::string_view v) { c.output_dir = std::string(v); },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      FRAN_INT("workers", workers, std::size_t),
      FRAN_INT("eval_episodes", eval_episodes, std::size_t),
      {"write_checkpoints",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.write_checkpoints = to_bool(k, v); },
       [](const ExperimentConfig& c) { return std::string(c.write_checkpoints ? "true" : "false"); }},
      {"sweep_mds",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.sweep_mds.clear();
         for (std::string_view s : split_list(v)) c.sweep_mds.push_back(to_int<int>(k, s));
       },
       [](const ExperimentConfig& c) { return join(c.sweep_mds); }},
      {"sweep_fap_cpu",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.sweep_fap_cpu.clear();
         for (std::string_view s : split_list(v)) c.sweep_fap_cpu.push_back(to_double(k, s));
       },
       [](const ExperimentConfig& c) { return join(c.sweep_fap_cpu); }},
      // training schedule
      FRAN_INT("rounds", training.rounds, std::size_t),
      FRAN_INT("episodes_per_round", training.episodes_per_round, std::size_t),
      FRAN_INT("eval_episodes_per_round", training.eval_episodes_per_round, std::size_t),
      FRAN_INT("checkpoint_every", training.checkpoint_every, std::size_t),
      {"parallel_agents",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.training.parallel = to_bool(k, v); },
       [](const ExperimentConfig& c) { return std::string(c.training.parallel ? "true" : "false"); }},
      // environment
      FRAN_INT("num_faps", training.env.num_faps, int),
      FRAN_INT("mds_per_fap", training.env.mds_per_fap, int),
      FRAN_DOUBLE("cell_side", training.env.cell_side),
      FRAN_DOUBLE("bandwidth", training.env.bandwidth),
      FRAN_DOUBLE("fap_cpu", training.env.fap_cpu),
      FRAN_DOUBLE("md_cpu_min", training.env.md_cpu.lo),
      FRAN_DOUBLE("md_cpu_max", training.env.md_cpu.hi),
      FRAN_DOUBLE("md_power_min", training.env.md_power.lo),
      FRAN_DOUBLE("md_power_max", training.env.md_power.hi),
      FRAN_DOUBLE("noise_power", training.env.noise_power),
      FRAN_DOUBLE("path_loss_alpha", training.env.path_loss_alpha),
      FRAN_DOUBLE("bits_per_kb", bits_per_kb),
      FRAN_DOUBLE("task_bits_min", training.env.task_bits.lo),
      FRAN_DOUBLE("task_bits_max", training.env.task_bits.hi),
      {"task_kb_min",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.env.task_bits.lo = to_double(k, v) * c.bits_per_kb;
       },
       {}},
      {"task_kb_max",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.env.task_bits.hi = to_double(k, v) * c.bits_per_kb;
       },
       {}},
      FRAN_DOUBLE("cycles_per_bit_min", training.env.cycles_per_bit.lo),
      FRAN_DOUBLE("cycles_per_bit_max", training.env.cycles_per_bit.hi),
      FRAN_DOUBLE("weight_delay", training.env.weight_delay),
      FRAN_DOUBLE("weight_energy", training.env.weight_energy),
      FRAN_DOUBLE("slot_duration", training.env.slot_duration),
      FRAN_INT("steps_per_episode", training.env.steps_per_episode, int),
      FRAN_DOUBLE("max_move", training.env.max_move),
      FRAN_INT("antennas", training.env.antennas, int),
      // ddpg
      FRAN_DOUBLE("gamma", training.ddpg.gamma),
      FRAN_DOUBLE("tau", training.ddpg.tau),
      FRAN_INT("replay_capacity", training.ddpg.replay_capacity, std::size_t),
      FRAN_INT("batch_size", training.ddpg.batch_size, std::size_t),
      FRAN_DOUBLE("actor_lr", training.ddpg.actor_lr),
      FRAN_DOUBLE("critic_lr", training.ddpg.critic_lr),
      FRAN_DOUBLE("noise_std_initial", training.ddpg.noise_std_initial),
      FRAN_DOUBLE("noise_decay", training.ddpg.noise_decay),
      FRAN_DOUBLE("noise_floor", training.ddpg.noise_floor),
      FRAN_DOUBLE("actor_output_scale", training.ddpg.actor_output_scale),
      FRAN_DOUBLE("critic_output_scale", training.ddpg.critic_output_scale),
      {"hidden",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.ddpg.hidden.clear();
         for (std::string_view s : split_list(v)) c.training.ddpg.hidden.push_back(to_int<std::size_t>(k, s));
         c.training.dqn.hidden = c.training.ddpg.hidden;
       },
       [](const ExperimentConfig& c) { return join(c.training.ddpg.hidden); }},
      // dqn
      FRAN_DOUBLE("dqn_gamma", training.dqn.gamma),
      FRAN_INT("dqn_replay_capacity", training.dqn.replay_capacity, std::size_t),
      FRAN_INT("dqn_batch_size", training.dqn.batch_size, std::size_t),
      FRAN_DOUBLE("dqn_lr", training.dqn.lr),
      FRAN_DOUBLE("epsilon_start", training.dqn.epsilon_start),
      FRAN_DOUBLE("epsilon_decay", training.dqn.epsilon_decay),
      FRAN_DOUBLE("epsilon_floor", training.dqn.epsilon_floor),
      FRAN_INT("target_sync_steps", training.dqn.target_sync_steps, std::size_t),
      // after "hidden" so a dump restores a DQN trunk that differs from the DDPG one
      {"dqn_hidden",
       [](ExperimentConfig& c, std::string_view k, std::string_view v) {
         c.training.dqn.hidden.clear();
         for (std::string_view s : split_list(v)) c.training.dqn.hidden.push_back(to_int<std::size_t>(k, s));
       },
       [](const ExperimentConfig& c) { return join(c.training.dqn.hidden); }},
  };
  return keys;
}

#undef FRAN_DOUBLE
#undef FRAN_INT

}  // namespace

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::fed_ddpg: return "fed-ddpg";
    case PolicyKind::fed_dqn: return "fed-dqn";
    case PolicyKind::local: return "local";
    case PolicyKind::fap_equal: return "fap-equal";
    case PolicyKind::oracle: return "oracle";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (PolicyKind k : {PolicyKind::fed_ddpg, PolicyKind::fed_dqn, PolicyKind::local,
                       PolicyKind::fap_equal, PolicyKind::oracle})
    if (name == to_string(k)) return k;
  throw ConfigError("agents", "unknown agent kind '" + std::string(name) +
                                  "' (expected fed-ddpg, fed-dqn, local, fap-equal, oracle)");
}

bool is_learned(PolicyKind kind) { return kind == PolicyKind::fed_ddpg || kind == PolicyKind::fed_dqn; }

void ExperimentConfig::validate() const {
  training.validate();
  if (scenario.empty()) throw ConfigError("scenario", "must not be empty");
  for (char ch : scenario)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_'))
      throw ConfigError("scenario", "only letters, digits, '-' and '_' are allowed");
  if (agents.empty()) throw ConfigError("agents", "must list at least one agent kind");
  if (seeds.empty()) throw ConfigError("seeds", "seed list must not be empty");
  if (workers == 0) throw ConfigError("workers", "must be >= 1");
  if (eval_episodes == 0) throw ConfigError("eval_episodes", "must be >= 1");
  if (!(bits_per_kb > 0.0)) throw ConfigError("bits_per_kb", "must be > 0");
  for (int m : sweep_mds)
    if (m < 1) throw ConfigError("sweep_mds", "every entry must be >= 1");
  for (double f : sweep_fap_cpu)
    if (!(f > 0.0)) throw ConfigError("sweep_fap_cpu", "every entry must be > 0");
}

void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const Key& k : key_table()) {
    if (key == k.name) {
      k.set(config, key, value);
      return;
    }
  }
  throw ConfigError(std::string(key), "unknown configuration key");
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    try {
      set_config_value(base, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      std::string detail = e.what();
      detail.erase(0, e.field().size() + 2);  // drop the "field: " prefix
      throw ConfigError(e.field(), "line " + std::to_string(line_no) + ": " + detail);
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  return parse_config(in, std::move(base));
}

void apply_preset(ExperimentConfig& config, std::string_view name) {
  if (name == "desk") {
    config.training.env.num_faps = 2;
    config.training.env.mds_per_fap = 3;
    config.training.env.steps_per_episode = 50;
    config.training.rounds = 200;
    return;
  }
  if (name == "paper-scale") {
    config.scenario = "paper-scale";
    config.training.env.num_faps = 4;
    config.training.env.mds_per_fap = 5;
    config.training.env.steps_per_episode = 100;
    config.training.rounds = 1000;
    config.sweep_mds = {3, 4, 5, 6, 7};
    config.sweep_fap_cpu = {3e9, 4e9, 5e9, 6e9, 7e9};
    return;
  }
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (expected desk, paper-scale)");
}

std::string dump_config(const ExperimentConfig& config) {
  std::string out;
  for (const Key& k : key_table()) {
    if (!k.get) continue;
    out += k.name;
    out += " = ";
    out += k.get(config);
    out += '\n';
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : key_table()) out.emplace_back(k.name);
  return out;
}

}  // namespace fran
