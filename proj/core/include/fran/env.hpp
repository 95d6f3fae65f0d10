#pragma once

// Fog-RAN system model: one F-AP cell with M mobile devices, binary task
// offloading, OFDMA uplink, and a weighted delay/energy cost per slot.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace fran {

/// Distance clamp for the path-loss model, meters.
inline constexpr double kMinDistance = 1.0;
/// Smallest compute/bandwidth share an offloaded device may hold.
inline constexpr double kMinAllocation = 1e-3;
/// Raw actor outputs above this offload the task.
inline constexpr double kOffloadThreshold = 0.5;
/// Energy per cycle is kEnergyCoefficient * f^2.
inline constexpr double kEnergyCoefficient = 1e-27;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

struct EnvConfig {
  int num_faps = 2;
  int mds_per_fap = 3;
  double cell_side = 200.0;           // m
  double bandwidth = 1e7;             // Hz
  double fap_cpu = 5e9;               // Hz
  Range md_cpu{1e9, 2e9};             // Hz
  Range md_power{0.1, 1.0};           // W
  double noise_power = 1e-13;         // W, -100 dBm
  double path_loss_alpha = 4.0;
  Range task_bits{1.6e6, 2.4e6};      // 200-300 KB at 8000 bits/KB
  Range cycles_per_bit{200.0, 500.0};
  double weight_delay = 0.5;
  double weight_energy = 0.5;
  double slot_duration = 1.0;         // s
  int steps_per_episode = 50;
  std::uint64_t rng_seed = 1;
  double max_move = 5.0;              // m per slot, mobility step bound
  int antennas = 8;                   // recorded only; no cost term uses it

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

struct TaskSpec {
  double bits = 0.0;
  double cycles = 0.0;
};

struct MobileDevice {
  int id = 0;
  Point position;
  double cpu_freq = 0.0;      // Hz
  double tx_power = 0.0;      // W
  double energy_coeff = 0.0;  // J/cycle
};

struct FogAccessPoint {
  int id = 0;
  Point position;
  double cpu_freq = 0.0;   // Hz
  double bandwidth = 0.0;  // Hz
  std::vector<MobileDevice> devices;
};

/// Observable state of one cell at one slot.
struct SlotState {
  std::vector<double> task_bits;
  std::vector<double> task_cycles;
  Point fap_position;
  std::vector<Point> md_positions;
  std::vector<double> channel_gains;

  std::size_t num_mds() const noexcept { return task_bits.size(); }
  TaskSpec task(std::size_t m) const { return {task_bits[m], task_cycles[m]}; }
  friend bool operator==(const SlotState&, const SlotState&) = default;
};

struct ActionVector {
  std::vector<std::uint8_t> offload;
  std::vector<double> compute_share;
  std::vector<double> bandwidth_share;

  std::size_t num_mds() const noexcept { return offload.size(); }
  friend bool operator==(const ActionVector&, const ActionVector&) = default;
};

struct CostBreakdown {
  double total_delay = 0.0;
  double total_energy = 0.0;
  double cost = 0.0;
  std::vector<double> per_md_delay;
  std::vector<double> per_md_energy;
};

struct DelayEnergy {
  double delay = 0.0;
  double energy = 0.0;
};

/// Path-loss gain max(dist, kMinDistance)^-alpha.
double channel_gain(Point md_pos, Point fap_pos, double alpha);

DelayEnergy local_cost(const TaskSpec& task, const MobileDevice& md);

/// Shannon rate of an OFDMA share z of bandwidth B; zero when z is zero.
double uplink_rate(double share, double bandwidth, double power, double gain, double noise_power);

/// Delay (F-AP compute plus uplink) and MD transmit energy of an offloaded task.
/// Requires shares >= kMinAllocation.
DelayEnergy offload_cost(const TaskSpec& task, const MobileDevice& md, const FogAccessPoint& fap,
                         double compute_share, double bandwidth_share, double gain,
                         double noise_power);

/// Throws ConstraintViolation if the action breaks the share simplex or the
/// offloaded-allocation floor.
void validate_action(const ActionVector& action, std::size_t num_mds);

CostBreakdown slot_cost(const SlotState& state, const ActionVector& action,
                        const FogAccessPoint& fap, const EnvConfig& config);

/// Projects a raw [0,1]^{3M} actor output (x block, y block, z block) onto a
/// feasible ActionVector.
ActionVector sanitize_action(std::span<const double> raw, std::size_t num_mds);

/// Inverse view of an ActionVector as a raw vector (x as 0.0 / 1.0).
std::vector<double> to_raw(const ActionVector& action);

constexpr std::size_t state_dim(std::size_t num_mds) { return 5 * num_mds + 2; }
constexpr std::size_t action_dim(std::size_t num_mds) { return 3 * num_mds; }

/// Normalized feature vector, order: bits, cycles, F-AP position, MD positions, gains.
std::vector<double> flatten_state(const SlotState& state, const EnvConfig& config);

struct StepResult {
  double reward = 0.0;
  CostBreakdown cost;
};

/// Episodic MDP over one F-AP's cell. Single-threaded; all randomness comes
/// from the seeds handed to reset().
class FranEnv {
 public:
  explicit FranEnv(EnvConfig config, int fap_id = 0);

  /// Starts an episode from an explicit seed.
  const SlotState& reset(std::uint64_t seed);
  /// Starts an episode with the next seed of the instance's own seed stream.
  const SlotState& reset();

  /// Scores the action against the current slot, then advances mobility,
  /// tasks and gains. Reward is -cost / M.
  StepResult step(const ActionVector& action);
  StepResult step_raw(std::span<const double> raw_action);

  const SlotState& state() const;
  std::vector<double> observation() const { return flatten_state(state(), config_); }
  const FogAccessPoint& fap() const noexcept { return fap_; }
  const EnvConfig& config() const noexcept { return config_; }
  int slot() const noexcept { return slot_; }
  bool started() const noexcept { return started_; }
  bool done() const noexcept { return started_ && slot_ >= config_.steps_per_episode; }
  std::size_t num_mds() const noexcept { return fap_.devices.size(); }

 private:
  void draw_slot();
  void move_devices();

  EnvConfig config_;
  FogAccessPoint fap_;
  SlotState state_;
  std::mt19937_64 rng_;
  std::mt19937_64 seed_stream_;
  int slot_ = 0;
  bool started_ = false;
};

}  // namespace fran
