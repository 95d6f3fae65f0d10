#pragma once

// Small builders shared by the unit and acceptance tests.

#include <vector>

#include "fran/env.hpp"
#include "oracles.hpp"

namespace fixtures {

inline fran::MobileDevice device(double f, double p, fran::Point pos = {0, 0}) {
  fran::MobileDevice md;
  md.cpu_freq = f;
  md.tx_power = p;
  md.energy_coeff = 1e-27 * f * f;
  md.position = pos;
  return md;
}

inline fran::FogAccessPoint fap_at(fran::Point pos, double f = 5e9, double b = 1e7) {
  fran::FogAccessPoint fap;
  fap.position = pos;
  fap.cpu_freq = f;
  fap.bandwidth = b;
  return fap;
}

inline std::vector<oracle::Device> to_oracle(const fran::SlotState& s, const fran::FogAccessPoint& fap) {
  std::vector<oracle::Device> out;
  for (std::size_t m = 0; m < s.num_mds(); ++m) {
    const fran::MobileDevice& md = fap.devices[m];
    out.push_back({s.task_bits[m], s.task_cycles[m], md.cpu_freq, md.tx_power,
                   s.md_positions[m].x - s.fap_position.x, s.md_positions[m].y - s.fap_position.y});
  }
  return out;
}

inline oracle::Cell to_cell(const fran::EnvConfig& c) {
  return {c.fap_cpu, c.bandwidth, c.noise_power, c.path_loss_alpha, c.weight_delay, c.weight_energy};
}

}  // namespace fixtures
