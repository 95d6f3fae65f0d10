#include "fran/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "fran/errors.hpp"
#include "fran/evaluation.hpp"
#include "fran/federated.hpp"
#include "fran/seed.hpp"

namespace fran {

const char* const kMetricsHeader = "run_id,seed,round,mean_reward,mean_cost,mean_delay,mean_energy";
const char* const kAggregateHeader =
    "sweep,x,policy,seeds,reward_mean,reward_std,cost_mean,cost_std,delay_mean,delay_std,"
    "energy_mean,energy_std";

namespace {

constexpr std::uint64_t kFinalEvalStream = 500;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Values are stored as they will appear in the CSV, so aggregates are
// reproducible from the per-run files.
double csv_round(double v) { return std::strtod(num(v).c_str(), nullptr); }

MetricsRow make_row(const std::string& run_id, std::uint64_t seed, std::uint64_t round, double reward,
                    const EvalMetrics& m) {
  return {run_id, seed, round, csv_round(reward), csv_round(m.mean_cost), csv_round(m.mean_delay),
          csv_round(m.mean_energy)};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string run_id_for(const ExperimentConfig& c, PolicyKind p, std::uint64_t seed) {
  return c.scenario + "_" + to_string(p) + "_s" + std::to_string(seed);
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

ExperimentResult run_labelled(const ExperimentConfig& config, const std::string& sweep, double x,
                              const ProgressFn& progress) {
  config.validate();
  struct Job {
    PolicyKind policy;
    std::uint64_t seed;
    std::string run_id;
  };
  std::vector<Job> jobs;
  for (PolicyKind p : config.agents)
    for (std::uint64_t s : config.seeds) jobs.push_back({p, s, run_id_for(config, p, s)});

  std::vector<CellResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  auto say = [&](const std::string& msg) {
    if (!progress) return;
    std::lock_guard lock(progress_mutex);
    progress(msg);
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      try {
        const std::filesystem::path ckpt =
            config.write_checkpoints && is_learned(job.policy)
                ? config.output_dir / "checkpoints" / job.run_id
                : std::filesystem::path{};
        results[i] = run_cell(config, job.policy, job.seed, job.run_id, ckpt);
        say(job.run_id + ": cost " + num(results[i].final.mean_cost));
      } catch (...) {
        errors[i] = std::current_exception();
        say(job.run_id + ": failed");
      }
    }
  };
  const std::size_t n_workers = std::min(config.workers, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  ExperimentResult out;
  std::string failures;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        failures += "\n  " + jobs[i].run_id + ": " + e.what();
      }
      continue;
    }
    write_metrics_csv(config.output_dir / (results[i].run_id + ".csv"), {results[i].final});
    if (!results[i].curve.empty())
      write_metrics_csv(config.output_dir / (results[i].run_id + "_curve.csv"), results[i].curve);
    out.cells.push_back(std::move(results[i]));
  }
  out.aggregate = aggregate(out.cells, sweep, x);
  write_aggregate_csv(config.output_dir / "aggregate.csv", out.aggregate);
  if (!failures.empty()) throw Error("run failures:" + failures);
  return out;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const MetricsRow& r : rows)
    out << r.run_id << ',' << r.seed << ',' << r.round << ',' << num(r.mean_reward) << ','
        << num(r.mean_cost) << ',' << num(r.mean_delay) << ',' << num(r.mean_energy) << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out = open_out(path);
  write_metrics_csv(out, rows);
}

std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw Error("metrics csv: bad header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw Error("metrics csv: expected 7 fields in '" + line + "'");
    MetricsRow r;
    r.run_id = f[0];
    r.seed = std::stoull(f[1]);
    r.round = std::stoull(f[2]);
    r.mean_reward = std::stod(f[3]);
    r.mean_cost = std::stod(f[4]);
    r.mean_delay = std::stod(f[5]);
    r.mean_energy = std::stod(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return read_metrics_csv(in);
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateHeader << '\n';
  for (const AggregateRow& r : rows)
    out << r.sweep << ',' << num(r.x) << ',' << to_string(r.policy) << ',' << r.seeds << ','
        << num(r.reward_mean) << ',' << num(r.reward_std) << ',' << num(r.cost_mean) << ','
        << num(r.cost_std) << ',' << num(r.delay_mean) << ',' << num(r.delay_std) << ','
        << num(r.energy_mean) << ',' << num(r.energy_std) << '\n';
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out = open_out(path);
  write_aggregate_csv(out, rows);
}

std::vector<AggregateRow> aggregate(const std::vector<CellResult>& cells, const std::string& sweep,
                                    double x) {
  std::vector<PolicyKind> order;
  for (const CellResult& c : cells)
    if (std::find(order.begin(), order.end(), c.policy) == order.end()) order.push_back(c.policy);
  std::vector<AggregateRow> rows;
  for (PolicyKind p : order) {
    std::vector<double> reward, cost, delay, energy;
    for (const CellResult& c : cells) {
      if (c.policy != p) continue;
      reward.push_back(c.final.mean_reward);
      cost.push_back(c.final.mean_cost);
      delay.push_back(c.final.mean_delay);
      energy.push_back(c.final.mean_energy);
    }
    AggregateRow r;
    r.sweep = sweep;
    r.x = x;
    r.policy = p;
    r.seeds = cost.size();
    mean_std(reward, r.reward_mean, r.reward_std);
    mean_std(cost, r.cost_mean, r.cost_std);
    mean_std(delay, r.delay_mean, r.delay_std);
    mean_std(energy, r.energy_mean, r.energy_std);
    rows.push_back(r);
  }
  return rows;
}

std::uint64_t final_eval_root(std::uint64_t seed) { return mix_seed(seed, kFinalEvalStream); }

CellResult run_cell(const ExperimentConfig& config, PolicyKind policy, std::uint64_t seed,
                    const std::string& run_id, const std::filesystem::path& checkpoint_dir) {
  CellResult cell;
  cell.run_id = run_id;
  cell.policy = policy;
  cell.seed = seed;
  const std::uint64_t root = final_eval_root(seed);
  const EnvConfig& env = config.training.env;

  auto constant = [](Policy p) -> PolicyFactory { return [p](int) { return p; }; };
  switch (policy) {
    case PolicyKind::local:
    case PolicyKind::fap_equal:
    case PolicyKind::oracle: {
      const Policy p = policy == PolicyKind::local       ? local_baseline()
                       : policy == PolicyKind::fap_equal ? equal_baseline()
                                                         : oracle_baseline();
      const EvalMetrics m = evaluate(env, constant(p), root, config.eval_episodes);
      cell.final = make_row(run_id, seed, 0, m.mean_reward, m);
      return cell;
    }
    case PolicyKind::fed_ddpg:
    case PolicyKind::fed_dqn: {
      TrainingConfig tc = config.training;
      tc.kind = policy == PolicyKind::fed_ddpg ? AgentKind::ddpg : AgentKind::dqn;
      tc.seed = seed;
      if (!checkpoint_dir.empty()) tc.checkpoint_dir = checkpoint_dir;
      else tc.checkpoint_dir.reset();
      const TrainingResult tr = run_training(tc);
      for (const RoundReport& r : tr.rounds)
        cell.curve.push_back(make_row(run_id, seed, r.round, r.mean_reward, r.eval));
      const EvalMetrics m = evaluate(env, learned_policy(tr.final_model, tc), root, config.eval_episodes);
      cell.final = make_row(run_id, seed, tr.final_model.round, m.mean_reward, m);
      return cell;
    }
  }
  throw ConfigError("agents", "unknown policy kind");
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  return run_labelled(config, "experiment", 0.0, progress);
}

std::vector<AggregateRow> sweep_mds(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  std::vector<AggregateRow> rows;
  for (int m : config.sweep_mds) {
    ExperimentConfig point = config;
    point.training.env.mds_per_fap = m;
    point.output_dir = config.output_dir / ("mds_" + std::to_string(m));
    if (progress) progress("M = " + std::to_string(m));
    const ExperimentResult r = run_labelled(point, "mds", m, progress);
    rows.insert(rows.end(), r.aggregate.begin(), r.aggregate.end());
  }
  write_aggregate_csv(config.output_dir / "sweep_mds.csv", rows);
  return rows;
}

std::vector<AggregateRow> sweep_fap_cpu(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  std::vector<AggregateRow> rows;
  for (double f : config.sweep_fap_cpu) {
    ExperimentConfig point = config;
    point.training.env.fap_cpu = f;
    point.output_dir = config.output_dir / ("fap_cpu_" + num(f / 1e9));
    if (progress) progress("f_n = " + num(f / 1e9) + " GHz");
    const ExperimentResult r = run_labelled(point, "fap_cpu", f, progress);
    rows.insert(rows.end(), r.aggregate.begin(), r.aggregate.end());
  }
  write_aggregate_csv(config.output_dir / "sweep_fap_cpu.csv", rows);
  return rows;
}

std::vector<MetricsRow> convergence_run(const ExperimentConfig& config, const ProgressFn& progress) {
  ExperimentConfig learned = config;
  learned.agents.clear();
  for (PolicyKind p : config.agents)
    if (is_learned(p)) learned.agents.push_back(p);
  if (learned.agents.empty())
    throw ConfigError("agents", "convergence needs at least one learned agent (fed-ddpg, fed-dqn)");
  const ExperimentResult r = run_labelled(learned, "experiment", 0.0, progress);
  std::vector<MetricsRow> rows;
  for (const CellResult& c : r.cells) rows.insert(rows.end(), c.curve.begin(), c.curve.end());
  write_metrics_csv(config.output_dir / "convergence.csv", rows);
  return rows;
}

}  // namespace fran
