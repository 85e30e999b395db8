#pragma once

#include <cstdint>

#include "hydrosim/core/rng.hpp"
#include "hydrosim/sampler/sampler.hpp"

namespace hydrosim::sampler {

struct CalibrationResult {
  int cycles = 0;
  double mean_fill_time = 0.0;  ///< s, start of stroke to home switch
  double mean_volume = 0.0;     ///< mL per syringe at retrieval
  double mean_loss_pct = 0.0;   ///< mean of 1 - v / capacity
  int timeouts = 0;
};

/// Runs independent single-motor cycles through the state machine, then
/// lets sealed syringes sit for `retrieval_delay` seconds before reading
/// their volume.
inline CalibrationResult run_calibration(const FaultModel& faults, int cycles, std::uint64_t seed, double dt = 0.1,
                                         double retrieval_delay = kCalibrationRetrievalDelay,
                                         SamplerParams params = {}) {
  params.n_modules = 1;
  params.motors_per_module = 1;
  const RngFactory factory(seed);
  CalibrationResult r;
  double time_sum = 0.0, vol_sum = 0.0, loss_sum = 0.0;
  int syringes = 0;
  for (int c = 0; c < cycles; ++c) {
    CounterRng rng = factory.stream("sampler.calibration", static_cast<std::uint64_t>(c));
    SamplerState st(params);
    apply_command(st, {0, 0, Action::Forward});
    double fill_time = -1.0;
    while (fill_time < 0.0) {
      for (const auto& e : step_sampler(st, dt, faults, rng)) {
        if (e.kind == EventKind::CycleComplete) fill_time = e.t;
        if (e.kind == EventKind::SwitchTimeout) {
          fill_time = e.t;
          ++r.timeouts;
        }
      }
    }
    if (retrieval_delay > 0.0) step_sampler(st, retrieval_delay, faults, rng);
    time_sum += fill_time;
    for (const auto& s : st.syringes) {
      vol_sum += s.volume;
      loss_sum += 1.0 - s.volume / params.capacity;
      ++syringes;
    }
  }
  r.cycles = cycles;
  r.mean_fill_time = time_sum / cycles;
  r.mean_volume = vol_sum / syringes;
  r.mean_loss_pct = 100.0 * loss_sum / syringes;
  return r;
}

}  // namespace hydrosim::sampler
