#include "fran/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fran/errors.hpp"

namespace fran {

namespace {

// Share sums may exceed 1 by this much before the simplex projection kicks in.
constexpr double kSimplexSlack = 1e-12;

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be finite and > 0");
}

void require_range(const Range& r, const char* field) {
  require_positive(r.lo, field);
  require_positive(r.hi, field);
  if (r.lo > r.hi) throw ConfigError(field, "min exceeds max");
}

double draw(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

// Projects one share block onto {v >= floor on offloaded entries, sum <= 1}.
// Entries below the floor are pinned to it and the remainder is rescaled
// proportionally over the free entries.
void project_block(std::vector<double>& share, const std::vector<std::uint8_t>& offload) {
  const std::size_t m = share.size();
  for (std::size_t i = 0; i < m; ++i)
    share[i] = offload[i] ? std::max(share[i], kMinAllocation) : 0.0;

  double sum = 0.0;
  for (double v : share) sum += v;
  if (sum <= 1.0 + kSimplexSlack) return;

  std::vector<std::uint8_t> pinned(m, 0);
  for (;;) {
    double free_sum = 0.0;
    std::size_t num_pinned = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!offload[i]) continue;
      if (pinned[i]) ++num_pinned;
      else free_sum += share[i];
    }
    const double budget = 1.0 - static_cast<double>(num_pinned) * kMinAllocation;
    bool repinned = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (!offload[i] || pinned[i]) continue;
      share[i] = share[i] / free_sum * budget;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (offload[i] && !pinned[i] && share[i] < kMinAllocation) {
        share[i] = kMinAllocation;
        pinned[i] = 1;
        repinned = true;
      }
    }
    if (!repinned) break;
  }
}

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void EnvConfig::validate() const {
  if (num_faps < 1) throw ConfigError("num_faps", "must be >= 1");
  if (mds_per_fap < 1) throw ConfigError("mds_per_fap", "must be >= 1");
  if (static_cast<double>(mds_per_fap) * kMinAllocation > 1.0)
    throw ConfigError("mds_per_fap", "allocation floor times M exceeds 1");
  require_positive(cell_side, "cell_side");
  require_positive(bandwidth, "bandwidth");
  require_positive(fap_cpu, "fap_cpu");
  require_range(md_cpu, "md_cpu");
  require_range(md_power, "md_power");
  require_positive(noise_power, "noise_power");
  require_positive(path_loss_alpha, "path_loss_alpha");
  require_range(task_bits, "task_bits");
  require_range(cycles_per_bit, "cycles_per_bit");
  if (!(weight_delay >= 0.0) || !(weight_energy >= 0.0))
    throw ConfigError("weight_delay", "weights must be nonnegative");
  if (std::abs(weight_delay + weight_energy - 1.0) > 1e-12)
    throw ConfigError("weight_energy", "weight_delay + weight_energy must equal 1");
  require_positive(slot_duration, "slot_duration");
  if (steps_per_episode < 1) throw ConfigError("steps_per_episode", "must be >= 1");
  if (!(max_move >= 0.0) || !std::isfinite(max_move))
    throw ConfigError("max_move", "must be finite and >= 0");
}

double channel_gain(Point md_pos, Point fap_pos, double alpha) {
  const double d = std::max(distance(md_pos, fap_pos), kMinDistance);
  return std::pow(d, -alpha);
}

DelayEnergy local_cost(const TaskSpec& task, const MobileDevice& md) {
  return {task.cycles / md.cpu_freq, md.energy_coeff * task.cycles};
}

double uplink_rate(double share, double bandwidth, double power, double gain, double noise_power) {
  if (share == 0.0) return 0.0;
  return share * bandwidth * std::log2(1.0 + power * gain / noise_power);
}

DelayEnergy offload_cost(const TaskSpec& task, const MobileDevice& md, const FogAccessPoint& fap,
                         double compute_share, double bandwidth_share, double gain,
                         double noise_power) {
  if (compute_share < kMinAllocation || bandwidth_share < kMinAllocation)
    throw ConstraintViolation("allocation-floor",
                              "offloaded task needs compute and bandwidth share >= 1e-3");
  const double rate = uplink_rate(bandwidth_share, fap.bandwidth, md.tx_power, gain, noise_power);
  const double compute_delay = task.cycles / (compute_share * fap.cpu_freq);
  const double tx_delay = task.bits / rate;
  return {compute_delay + tx_delay, md.tx_power * tx_delay};
}

void validate_action(const ActionVector& action, std::size_t num_mds) {
  if (action.offload.size() != num_mds || action.compute_share.size() != num_mds ||
      action.bandwidth_share.size() != num_mds)
    throw ShapeError("action vector blocks must each have length M = " + std::to_string(num_mds));
  double y_sum = 0.0;
  double z_sum = 0.0;
  for (std::size_t m = 0; m < num_mds; ++m) {
    const double y = action.compute_share[m];
    const double z = action.bandwidth_share[m];
    if (action.offload[m] > 1) throw ConstraintViolation("offload-binary", "x must be 0 or 1");
    if (!(y >= 0.0 && y <= 1.0)) throw ConstraintViolation("compute-range", "y outside [0,1]");
    if (!(z >= 0.0 && z <= 1.0)) throw ConstraintViolation("bandwidth-range", "z outside [0,1]");
    if (action.offload[m] && (y < kMinAllocation || z < kMinAllocation))
      throw ConstraintViolation("allocation-floor",
                                "MD " + std::to_string(m) + " offloads with a share below 1e-3");
    y_sum += y;
    z_sum += z;
  }
  if (y_sum > 1.0 + kSimplexSlack)
    throw ConstraintViolation("compute-simplex", "sum of compute shares exceeds 1");
  if (z_sum > 1.0 + kSimplexSlack)
    throw ConstraintViolation("bandwidth-simplex", "sum of bandwidth shares exceeds 1");
}

CostBreakdown slot_cost(const SlotState& state, const ActionVector& action,
                        const FogAccessPoint& fap, const EnvConfig& config) {
  const std::size_t m_count = state.num_mds();
  if (fap.devices.size() != m_count) throw ShapeError("F-AP device count differs from state");
  validate_action(action, m_count);

  CostBreakdown out;
  out.per_md_delay.resize(m_count);
  out.per_md_energy.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const TaskSpec task = state.task(m);
    const MobileDevice& md = fap.devices[m];
    const DelayEnergy de =
        action.offload[m]
            ? offload_cost(task, md, fap, action.compute_share[m], action.bandwidth_share[m],
                           state.channel_gains[m], config.noise_power)
            : local_cost(task, md);
    out.per_md_delay[m] = de.delay;
    out.per_md_energy[m] = de.energy;
    out.total_delay += de.delay;
    out.total_energy += de.energy;
  }
  out.cost = config.weight_delay * out.total_delay + config.weight_energy * out.total_energy;
  return out;
}

ActionVector sanitize_action(std::span<const double> raw, std::size_t num_mds) {
  if (raw.size() != action_dim(num_mds))
    throw ShapeError("raw action length " + std::to_string(raw.size()) + ", expected " +
                     std::to_string(action_dim(num_mds)));
  ActionVector a;
  a.offload.resize(num_mds);
  a.compute_share.resize(num_mds);
  a.bandwidth_share.resize(num_mds);
  for (std::size_t i = 0; i < raw.size(); ++i)
    if (std::isnan(raw[i])) throw NumericError("raw action contains NaN");
  for (std::size_t m = 0; m < num_mds; ++m) {
    a.offload[m] = raw[m] > kOffloadThreshold ? 1 : 0;
    a.compute_share[m] = std::clamp(raw[num_mds + m], 0.0, 1.0);
    a.bandwidth_share[m] = std::clamp(raw[2 * num_mds + m], 0.0, 1.0);
  }
  project_block(a.compute_share, a.offload);
  project_block(a.bandwidth_share, a.offload);
  return a;
}

std::vector<double> to_raw(const ActionVector& action) {
  const std::size_t m_count = action.num_mds();
  std::vector<double> raw(action_dim(m_count));
  for (std::size_t m = 0; m < m_count; ++m) {
    raw[m] = action.offload[m] ? 1.0 : 0.0;
    raw[m_count + m] = action.compute_share[m];
    raw[2 * m_count + m] = action.bandwidth_share[m];
  }
  return raw;
}

std::vector<double> flatten_state(const SlotState& state, const EnvConfig& config) {
  const std::size_t m_count = state.num_mds();
  const double bits_scale = config.task_bits.hi;
  const double cycles_scale = config.task_bits.hi * config.cycles_per_bit.hi;
  const double gain_scale = std::pow(kMinDistance, -config.path_loss_alpha);
  std::vector<double> out;
  out.reserve(state_dim(m_count));
  for (double b : state.task_bits) out.push_back(b / bits_scale);
  for (double d : state.task_cycles) out.push_back(d / cycles_scale);
  out.push_back(state.fap_position.x / config.cell_side);
  out.push_back(state.fap_position.y / config.cell_side);
  for (const Point& p : state.md_positions) {
    out.push_back(p.x / config.cell_side);
    out.push_back(p.y / config.cell_side);
  }
  for (double g : state.channel_gains) out.push_back(g / gain_scale);
  return out;
}

FranEnv::FranEnv(EnvConfig config, int fap_id)
    : config_(std::move(config)),
      seed_stream_(config_.rng_seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(fap_id)) {
  config_.validate();
  fap_.id = fap_id;
  fap_.position = {config_.cell_side / 2.0, config_.cell_side / 2.0};
  fap_.cpu_freq = config_.fap_cpu;
  fap_.bandwidth = config_.bandwidth;
  fap_.devices.resize(static_cast<std::size_t>(config_.mds_per_fap));
}

const SlotState& FranEnv::reset() { return reset(seed_stream_()); }

const SlotState& FranEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  std::uniform_real_distribution<double> coord(0.0, config_.cell_side);
  for (std::size_t m = 0; m < fap_.devices.size(); ++m) {
    MobileDevice& md = fap_.devices[m];
    md.id = static_cast<int>(m);
    md.position.x = coord(rng_);
    md.position.y = coord(rng_);
    md.cpu_freq = draw(rng_, config_.md_cpu);
    md.tx_power = draw(rng_, config_.md_power);
    md.energy_coeff = kEnergyCoefficient * md.cpu_freq * md.cpu_freq;
  }
  slot_ = 0;
  started_ = true;
  draw_slot();
  return state_;
}

const SlotState& FranEnv::state() const {
  if (!started_) throw LifecycleError("environment used before reset()");
  return state_;
}

void FranEnv::draw_slot() {
  const std::size_t m_count = fap_.devices.size();
  state_.task_bits.resize(m_count);
  state_.task_cycles.resize(m_count);
  state_.md_positions.resize(m_count);
  state_.channel_gains.resize(m_count);
  state_.fap_position = fap_.position;
  for (std::size_t m = 0; m < m_count; ++m) {
    const double bits = draw(rng_, config_.task_bits);
    const double cpb = draw(rng_, config_.cycles_per_bit);
    state_.task_bits[m] = bits;
    state_.task_cycles[m] = bits * cpb;
    state_.md_positions[m] = fap_.devices[m].position;
    state_.channel_gains[m] =
        channel_gain(fap_.devices[m].position, fap_.position, config_.path_loss_alpha);
  }
}

void FranEnv::move_devices() {
  // Bounded random walk, reflected at the cell walls.
  const double side = config_.cell_side;
  auto reflect = [side](double v) {
    while (v < 0.0 || v > side) v = v < 0.0 ? -v : 2.0 * side - v;
    return v;
  };
  std::uniform_real_distribution<double> step_len(0.0, config_.max_move);
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
  for (MobileDevice& md : fap_.devices) {
    const double r = step_len(rng_);
    const double theta = heading(rng_);
    md.position.x = reflect(md.position.x + r * std::cos(theta));
    md.position.y = reflect(md.position.y + r * std::sin(theta));
  }
}

StepResult FranEnv::step(const ActionVector& action) {
  if (!started_) throw LifecycleError("step() before reset()");
  if (done()) throw LifecycleError("step() after episode end; call reset()");
  StepResult out;
  out.cost = slot_cost(state_, action, fap_, config_);
  out.reward = -out.cost.cost / static_cast<double>(fap_.devices.size());
  ++slot_;
  move_devices();
  draw_slot();
  return out;
}

StepResult FranEnv::step_raw(std::span<const double> raw_action) {
  return step(sanitize_action(raw_action, fap_.devices.size()));
}

}  // namespace fran
