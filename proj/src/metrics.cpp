#include "lossgate/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "lossgate/error.hpp"

namespace lossgate {

namespace {

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

double total_time(const SkipFractions& f, const TimingModel& timing,
                  std::uint64_t num_batches) {
  if (!in_unit(f.alpha_b) || !in_unit(f.alpha_fb)) {
    throw Error("skip fractions must lie in [0, 1]");
  }
  // Fractions recomputed from integer counters can exceed 1 by an ulp.
  const double full = 1.0 - f.alpha_b - f.alpha_fb;
  if (full < -1e-12) throw Error("alpha_b + alpha_fb exceeds 1");
  if (!(timing.t_forward > 0.0) || !(timing.t_backward > 0.0)) {
    throw Error("forward and backward times must be positive");
  }
  const double per_batch = f.alpha_b * timing.t_forward +
                           std::max(full, 0.0) * (timing.t_forward + timing.t_backward);
  return static_cast<double>(num_batches) * per_batch;
}

double t_norm(double t_ours, double t_all) {
  if (!(t_all > 0.0)) throw Error("reference time must be positive");
  return t_ours / t_all;
}

double agot(double accuracy, double t_norm_value, const AgotParams& p) {
  if (!(t_norm_value > 0.0)) throw Error("T_norm must be positive for AGOT");
  if (p.a_full == p.a_base) throw Error("AGOT undefined: a_full equals a_base");
  if (!in_unit(p.epsilon)) throw Error("epsilon must lie in [0, 1]");
  const double gain = (accuracy - p.a_base) / (p.a_full - p.a_base);
  return gain / std::pow(t_norm_value, 1.0 - p.epsilon);
}

EnergyEstimate energy_co2(const EnergyParams& p) {
  if (p.cpu_watts < 0 || p.dram_watts < 0 || p.gpu_watts < 0 || p.gpu_count < 0 ||
      p.hours < 0) {
    throw Error("energy parameters must be non-negative");
  }
  EnergyEstimate e;
  e.kwh = p.pue * p.hours * (p.cpu_watts + p.dram_watts + p.gpu_count * p.gpu_watts) /
          1000.0;
  e.co2e_lbs = p.co2_lbs_per_kwh * e.kwh;
  return e;
}

SkipFractions skip_fractions(std::uint64_t backward_skipped,
                             std::uint64_t forward_skipped,
                             std::uint64_t batches_total) {
  if (batches_total == 0) return {};
  if (backward_skipped + forward_skipped > batches_total) {
    throw Error("skip counts exceed the batch count");
  }
  const auto n = static_cast<double>(batches_total);
  return {static_cast<double>(backward_skipped) / n,
          static_cast<double>(forward_skipped) / n};
}

}  // namespace lossgate
