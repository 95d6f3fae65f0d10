#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fran/harness.hpp"

using namespace fran;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fran_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.scenario = "tiny";
  c.output_dir = out;
  c.seeds = {1, 2};
  c.eval_episodes = 2;
  c.training.env.num_faps = 2;
  c.training.env.mds_per_fap = 2;
  c.training.env.steps_per_episode = 10;
  c.training.rounds = 3;
  c.training.ddpg.hidden = {8};
  c.training.ddpg.batch_size = 8;
  c.training.dqn.hidden = {8};
  c.training.dqn.batch_size = 8;
  return c;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string x;
  while (std::getline(ss, x, ',')) f.push_back(x);
  return f;
}

}  // namespace

TEST(MetricsCsv, RoundTrip) {
  const std::vector<MetricsRow> rows{{"a_local_s1", 1, 0, -0.5, 1.5, 2.25, 0.75},
                                     {"a_local_s1", 1, 7, -1e-7, 3.14159265358, 1e-30, 12345.678901}};
  std::stringstream ss;
  write_metrics_csv(ss, rows);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kMetricsHeader);
  EXPECT_EQ(read_metrics_csv(ss), rows);
  std::stringstream bad("run_id,seed\n");
  EXPECT_THROW(read_metrics_csv(bad), Error);
  std::stringstream short_row(std::string(kMetricsHeader) + "\nx,1,2,3\n");
  EXPECT_THROW(read_metrics_csv(short_row), Error);
}

TEST(Aggregate, MeanAndSampleStd) {
  std::vector<CellResult> cells(3);
  const double costs[] = {1.0, 2.0, 4.0};
  for (int i = 0; i < 3; ++i) {
    cells[i].policy = PolicyKind::oracle;
    cells[i].final.mean_cost = costs[i];
  }
  cells.push_back({});
  cells.back().policy = PolicyKind::local;
  cells.back().final.mean_cost = 9.0;
  const auto rows = aggregate(cells, "mds", 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].policy, PolicyKind::oracle);
  EXPECT_EQ(rows[0].seeds, 3u);
  EXPECT_DOUBLE_EQ(rows[0].cost_mean, 7.0 / 3.0);
  EXPECT_DOUBLE_EQ(rows[0].cost_std, std::sqrt(((16.0 + 1.0 + 25.0) / 9.0) / 2.0));
  EXPECT_EQ(rows[1].cost_std, 0.0);
  EXPECT_EQ(rows[1].x, 3.0);
}

TEST(Experiment, WritesConsistentFiles) {
  const fs::path dir = fresh_dir("files");
  ExperimentConfig c = tiny(dir);
  const ExperimentResult r = run_experiment(c);
  ASSERT_EQ(r.cells.size(), 10u);
  EXPECT_TRUE(fs::exists(dir / "tiny_fed-ddpg_s1_curve.csv"));
  EXPECT_FALSE(fs::exists(dir / "tiny_local_s1_curve.csv"));
  EXPECT_TRUE(fs::exists(dir / "checkpoints" / "tiny_fed-dqn_s2" / "round_00003.ckpt"));

  std::map<std::string, std::vector<double>> costs;
  for (const CellResult& cell : r.cells) {
    const auto rows = read_metrics_csv(dir / (cell.run_id + ".csv"));
    ASSERT_EQ(rows.size(), 1u);
    const MetricsRow& m = rows[0];
    EXPECT_EQ(m, cell.final);
    EXPECT_NEAR(m.mean_cost, 0.5 * m.mean_delay + 0.5 * m.mean_energy, 1e-9 * m.mean_cost);
    EXPECT_NEAR(m.mean_reward, -m.mean_cost / 2, 1e-9 * m.mean_cost);
    costs[to_string(cell.policy)].push_back(m.mean_cost);
    if (is_learned(cell.policy)) {
      const auto curve = read_metrics_csv(dir / (cell.run_id + "_curve.csv"));
      ASSERT_EQ(curve.size(), 3u);
      EXPECT_EQ(curve.back().round, 3u);
      EXPECT_EQ(m.round, 3u);
    }
  }

  // Aggregate recomputed from the per-run files.
  std::ifstream agg(dir / "aggregate.csv");
  std::string line;
  std::getline(agg, line);
  EXPECT_EQ(line, kAggregateHeader);
  int n = 0;
  while (std::getline(agg, line)) {
    const auto f = split(line);
    ASSERT_EQ(f.size(), 12u);
    const auto& xs = costs.at(f[2]);
    const double mean = (xs[0] + xs[1]) / 2;
    const double sd = std::abs(xs[0] - xs[1]) / std::sqrt(2.0);
    EXPECT_NEAR(std::stod(f[6]), mean, 1e-11 * mean);
    EXPECT_NEAR(std::stod(f[7]), sd, 1e-11 * mean);
    ++n;
  }
  EXPECT_EQ(n, 5);
  fs::remove_all(dir);
}

TEST(Experiment, RerunsAreByteIdenticalAcrossWorkerCounts) {
  const fs::path a = fresh_dir("rerun_a"), b = fresh_dir("rerun_b");
  ExperimentConfig c = tiny(a);
  run_experiment(c);
  c.output_dir = b;
  c.workers = 3;
  run_experiment(c);
  const auto ta = tree(a), tb = tree(b);
  EXPECT_EQ(ta.size(), tb.size());
  EXPECT_TRUE(ta == tb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, FailureStillWritesOtherCells) {
  const fs::path dir = fresh_dir("failure");
  ExperimentConfig c = tiny(dir);
  c.agents = {PolicyKind::local, PolicyKind::oracle};
  c.training.env.mds_per_fap = 13;
  EXPECT_THROW(run_experiment(c), Error);
  EXPECT_TRUE(fs::exists(dir / "tiny_local_s1.csv"));
  EXPECT_FALSE(fs::exists(dir / "tiny_oracle_s1.csv"));
  fs::remove_all(dir);
}

TEST(Sweeps, LocalCostIgnoresFogCpu) {
  const fs::path dir = fresh_dir("cpu");
  ExperimentConfig c = tiny(dir);
  c.agents = {PolicyKind::local, PolicyKind::fap_equal};
  c.sweep_fap_cpu = {3e9, 5e9, 9e9};
  const auto rows = sweep_fap_cpu(c);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].cost_mean, rows[2].cost_mean);
  EXPECT_EQ(rows[0].cost_mean, rows[4].cost_mean);
  EXPECT_GT(rows[1].cost_mean, rows[3].cost_mean);
  EXPECT_GT(rows[3].cost_mean, rows[5].cost_mean);
  EXPECT_TRUE(fs::exists(dir / "fap_cpu_5" / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(dir / "sweep_fap_cpu.csv"));
  fs::remove_all(dir);
}

TEST(Sweeps, MdSweepLayout) {
  const fs::path dir = fresh_dir("mds");
  ExperimentConfig c = tiny(dir);
  c.agents = {PolicyKind::oracle};
  c.sweep_mds = {1, 3};
  const auto rows = sweep_mds(c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].sweep, "mds");
  EXPECT_EQ(rows[1].x, 3.0);
  EXPECT_TRUE(fs::exists(dir / "mds_3" / "tiny_oracle_s2.csv"));
  fs::remove_all(dir);
}

TEST(Convergence, LearnedOnly) {
  const fs::path dir = fresh_dir("conv");
  ExperimentConfig c = tiny(dir);
  c.seeds = {1};
  const auto rows = convergence_run(c);
  EXPECT_EQ(rows.size(), 6u);
  EXPECT_EQ(read_metrics_csv(dir / "convergence.csv"), rows);
  c.agents = {PolicyKind::local};
  EXPECT_THROW(convergence_run(c), ConfigError);
  fs::remove_all(dir);
}

TEST(Experiment, DominatedOffloadingLearnedMatchesLocal) {
  // With an unusable uplink the optimum is all-local, so a trained actor
  // should land on the local cost.
  const fs::path dir = fresh_dir("dominated");
  ExperimentConfig c;
  c.scenario = "dominated";
  c.output_dir = dir;
  c.seeds = {1};
  c.eval_episodes = 2;
  c.write_checkpoints = false;
  c.agents = {PolicyKind::fed_ddpg, PolicyKind::local, PolicyKind::oracle};
  c.training.env.num_faps = 2;
  c.training.env.mds_per_fap = 1;
  c.training.env.noise_power = 1e-3;
  c.training.env.steps_per_episode = 50;
  c.training.rounds = 60;
  const ExperimentResult r = run_experiment(c);
  const double learned = r.aggregate[0].cost_mean, local = r.aggregate[1].cost_mean,
               best = r.aggregate[2].cost_mean;
  EXPECT_NEAR(best, local, 1e-9 * local);
  EXPECT_LE(learned, local * 1.05);
  fs::remove_all(dir);
}
