// franctl: train, sweep and evaluate F-RAN offloading policies.

#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fran/baselines.hpp"
#include "fran/config.hpp"
#include "fran/errors.hpp"
#include "fran/evaluation.hpp"
#include "fran/federated.hpp"
#include "fran/harness.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::size_t workers = 0;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--config,-c", a.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
  app->add_option("--preset", a.preset, "Named preset applied before the config file")
      ->check(CLI::IsMember({"desk", "paper-scale"}));
  app->add_option("--seed", a.seeds, "Seed(s); replaces the config's seed list");
  app->add_option("--out,-o", a.out, "Output directory");
  app->add_option("--workers,-j", a.workers, "Parallel grid cells")->check(CLI::PositiveNumber);
  app->add_option("--set", a.sets, "Override a config key: --set key=value (repeatable)");
  app->add_flag("--quiet,-q", a.quiet, "No progress output");
}

fran::ExperimentConfig resolve(const CommonArgs& a) {
  fran::ExperimentConfig cfg;
  if (!a.preset.empty()) fran::apply_preset(cfg, a.preset);
  if (!a.config_path.empty()) cfg = fran::load_config(a.config_path, cfg);
  for (const std::string& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw fran::ConfigError(s, "--set expects key=value");
    fran::set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.workers) cfg.workers = a.workers;
  cfg.validate();
  return cfg;
}

fran::ProgressFn progress_for(const CommonArgs& a) {
  if (a.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

void print_aggregate(const std::vector<fran::AggregateRow>& rows) {
  std::printf("%-10s %-10s %-10s %5s %12s %12s\n", "sweep", "x", "policy", "seeds", "cost", "std");
  for (const auto& r : rows)
    std::printf("%-10s %-10g %-10s %5zu %12.6f %12.6f\n", r.sweep.c_str(), r.x, fran::to_string(r.policy),
                r.seeds, r.cost_mean, r.cost_std);
}

int cmd_eval(const fran::ExperimentConfig& cfg, const std::string& checkpoint) {
  std::vector<fran::MetricsRow> rows;
  fran::TrainingConfig tc = cfg.training;
  std::string learned_id;
  fran::GlobalModel model;
  if (!checkpoint.empty()) {
    model = fran::load_round_checkpoint(checkpoint);
    tc.kind = model.kind;
    learned_id = std::string("fed-") + fran::to_string(model.kind);
  }
  auto constant = [](fran::Policy p) -> fran::PolicyFactory { return [p](int) { return p; }; };
  for (std::uint64_t seed : cfg.seeds) {
    const std::uint64_t root = fran::final_eval_root(seed);
    auto add = [&](const std::string& id, const fran::PolicyFactory& f, std::uint64_t round) {
      const fran::EvalMetrics m = fran::evaluate(cfg.training.env, f, root, cfg.eval_episodes);
      rows.push_back({"eval_" + id + "_s" + std::to_string(seed), seed, round, m.mean_reward, m.mean_cost,
                      m.mean_delay, m.mean_energy});
    };
    if (!checkpoint.empty()) add(learned_id, fran::learned_policy(model, tc), model.round);
    add("local", constant(fran::local_baseline()), 0);
    add("fap-equal", constant(fran::equal_baseline()), 0);
    add("oracle", constant(fran::oracle_baseline()), 0);
  }
  fran::write_metrics_csv(cfg.output_dir / "eval.csv", rows);
  fran::write_metrics_csv(std::cout, rows);
  return 0;
}

// Checks the oracle against the closed-form baselines and random feasible
// actions on every evaluation slot.
int cmd_oracle_check(const fran::ExperimentConfig& cfg, std::size_t random_actions) {
  std::size_t slots = 0, violations = 0;
  double worst_gap = 0.0;
  for (std::uint64_t seed : cfg.seeds) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 0; n < cfg.training.env.num_faps; ++n) {
      fran::FranEnv env(cfg.training.env, n);
      for (std::size_t e = 0; e < cfg.eval_episodes; ++e) {
        env.reset(fran::eval_seed(fran::final_eval_root(seed), n, e));
        while (!env.done()) {
          const std::size_t m = env.num_mds();
          const double best = fran::oracle_slot_optimum(env.state(), env.fap(), env.config()).cost;
          std::vector<fran::ActionVector> candidates{fran::local_policy(m), fran::equal_policy(m)};
          for (std::size_t k = 0; k < random_actions; ++k) {
            std::vector<double> raw(fran::action_dim(m));
            for (double& v : raw) v = u(rng);
            candidates.push_back(fran::sanitize_action(raw, m));
          }
          for (const auto& a : candidates) {
            const double c = fran::slot_cost(env.state(), a, env.fap(), env.config()).cost;
            const double gap = (best - c) / c;
            if (gap > worst_gap) worst_gap = gap;
            if (gap > 1e-9) ++violations;
          }
          ++slots;
          env.step(fran::local_policy(m));
        }
      }
    }
  }
  std::printf("oracle-check: %zu slots, %zu violations, worst relative excess %.3g\n", slots, violations,
              worst_gap);
  return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated DRL offloading and resource allocation in fog RANs"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* train = app.add_subcommand("train", "Train and evaluate every configured policy over all seeds");
  auto* sweep_mds = app.add_subcommand("sweep-mds", "Average cost versus number of MDs per F-AP");
  auto* sweep_cpu = app.add_subcommand("sweep-cpu", "Average cost versus F-AP CPU frequency");
  auto* convergence = app.add_subcommand("convergence", "Per-round reward curves of the learned policies");
  auto* eval = app.add_subcommand("eval", "Evaluate a saved round checkpoint next to the baselines");
  auto* oracle = app.add_subcommand("oracle-check", "Check the per-slot oracle against feasible actions");
  auto* show = app.add_subcommand("config", "Print the resolved configuration");
  for (auto* sub : {train, sweep_mds, sweep_cpu, convergence, eval, oracle, show}) add_common(sub, args);

  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Round checkpoint (round_XXXXX.ckpt)")->check(CLI::ExistingFile);
  std::size_t random_actions = 64;
  oracle->add_option("--random-actions", random_actions, "Random feasible actions per slot");

  CLI11_PARSE(app, argc, argv);

  try {
    const fran::ExperimentConfig cfg = resolve(args);
    const fran::ProgressFn progress = progress_for(args);
    if (*train) {
      print_aggregate(fran::run_experiment(cfg, progress).aggregate);
    } else if (*sweep_mds) {
      print_aggregate(fran::sweep_mds(cfg, progress));
    } else if (*sweep_cpu) {
      print_aggregate(fran::sweep_fap_cpu(cfg, progress));
    } else if (*convergence) {
      const auto rows = fran::convergence_run(cfg, progress);
      std::printf("%zu rows written to %s\n", rows.size(), (cfg.output_dir / "convergence.csv").c_str());
    } else if (*eval) {
      return cmd_eval(cfg, checkpoint);
    } else if (*oracle) {
      return cmd_oracle_check(cfg, random_actions);
    } else if (*show) {
      std::cout << fran::dump_config(cfg);
    }
  } catch (const fran::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
