#include "fran/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fran/errors.hpp"

namespace fran {

ActionVector local_policy(std::size_t num_mds) {
  ActionVector a;
  a.offload.assign(num_mds, 0);
  a.compute_share.assign(num_mds, 0.0);
  a.bandwidth_share.assign(num_mds, 0.0);
  return a;
}

ActionVector equal_policy(std::size_t num_mds) {
  const double share = num_mds ? 1.0 / static_cast<double>(num_mds) : 0.0;
  ActionVector a;
  a.offload.assign(num_mds, 1);
  a.compute_share.assign(num_mds, share);
  a.bandwidth_share.assign(num_mds, share);
  return a;
}

std::vector<double> closed_form_allocation(std::span<const double> weights) {
  std::vector<double> out(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
      throw std::invalid_argument("closed_form_allocation: weights must be finite and > 0");
    out[i] = std::sqrt(weights[i]);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double allocation_objective(std::span<const double> weights, std::span<const double> shares) {
  if (weights.size() != shares.size()) throw ShapeError("allocation_objective: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) sum += weights[i] / shares[i];
  return sum;
}

OracleResult oracle_slot_optimum(const SlotState& state, const FogAccessPoint& fap,
                                 const EnvConfig& config) {
  const std::size_t m_count = state.num_mds();
  if (m_count > kOracleMaxMds)
    throw ConfigError("mds_per_fap", "oracle enumerates 2^M vectors and refuses M > " +
                                         std::to_string(kOracleMaxMds));
  if (fap.devices.size() != m_count) throw ShapeError("oracle: F-AP device count differs from state");

  const double w_delay = config.weight_delay;
  const double w_energy = config.weight_energy;

  // Per-device constants: local cost, compute weight, bandwidth weight.
  std::vector<double> local(m_count), compute_w(m_count), bandwidth_w(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const MobileDevice& md = fap.devices[m];
    const DelayEnergy le = local_cost(state.task(m), md);
    local[m] = w_delay * le.delay + w_energy * le.energy;
    compute_w[m] = w_delay * state.task_cycles[m] / fap.cpu_freq;
    const double spectral =
        fap.bandwidth * std::log2(1.0 + md.tx_power * state.channel_gains[m] / config.noise_power);
    bandwidth_w[m] = (w_delay + w_energy * md.tx_power) * state.task_bits[m] / spectral;
  }

  OracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  const std::size_t combos = std::size_t{1} << m_count;
  std::vector<double> cw, bw;
  for (std::size_t mask = 0; mask < combos; ++mask) {
    cw.clear();
    bw.clear();
    double cost = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      if (mask >> m & 1u) {
        cw.push_back(compute_w[m]);
        bw.push_back(bandwidth_w[m]);
      } else {
        cost += local[m];
      }
    }
    // min sum a/y over the simplex equals (sum sqrt a)^2.
    double sc = 0.0, sb = 0.0;
    for (double a : cw) sc += std::sqrt(a);
    for (double a : bw) sb += std::sqrt(a);
    cost += sc * sc + sb * sb;
    if (cost < best.cost) {
      best.cost = cost;
      best.action = local_policy(m_count);
      const std::vector<double> y = closed_form_allocation(cw);
      const std::vector<double> z = closed_form_allocation(bw);
      std::size_t k = 0;
      for (std::size_t m = 0; m < m_count; ++m) {
        if (!(mask >> m & 1u)) continue;
        best.action.offload[m] = 1;
        best.action.compute_share[m] = y[k];
        best.action.bandwidth_share[m] = z[k];
        ++k;
      }
    }
  }
  return best;
}

}  // namespace fran
