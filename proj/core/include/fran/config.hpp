#pragma once

// Experiment configuration: a flat `key = value` text format.
//
//   # comment
//   scenario = desk
//   agents = fed-ddpg, local, fap-equal, oracle
//   seeds = 1, 2, 3
//   mds_per_fap = 3
//
// Lists are comma separated. Every EnvConfig and hyperparameter field has a
// key; see config_keys() for the full list. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fran/federated.hpp"

namespace fran {

enum class PolicyKind { fed_ddpg, fed_dqn, local, fap_equal, oracle };

const char* to_string(PolicyKind kind);
/// Throws ConfigError("agents", ...) on an unknown name.
PolicyKind parse_policy_kind(std::string_view name);
bool is_learned(PolicyKind kind);

struct ExperimentConfig {
  std::string scenario = "desk";
  TrainingConfig training;  // env, hyperparameters, rounds, episodes
  std::vector<PolicyKind> agents{PolicyKind::fed_ddpg, PolicyKind::fed_dqn, PolicyKind::local,
                                 PolicyKind::fap_equal, PolicyKind::oracle};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::filesystem::path output_dir = "out";
  std::size_t workers = 1;
  /// Frozen-policy evaluation episodes per F-AP after training.
  std::size_t eval_episodes = 20;
  bool write_checkpoints = true;
  std::vector<int> sweep_mds{1, 2, 3, 4};
  std::vector<double> sweep_fap_cpu{3e9, 5e9, 7e9, 9e9};
  double bits_per_kb = 8000.0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Applies one `key = value` assignment. Throws ConfigError naming the key.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses the text format on top of `base`. Errors carry the line number.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Named presets: "desk" (defaults) and "paper-scale".
void apply_preset(ExperimentConfig& config, std::string_view name);

/// Renders every key in canonical order; parse_config(dump_config(c)) reproduces c.
std::string dump_config(const ExperimentConfig& config);

std::vector<std::string> config_keys();

}  // namespace fran
