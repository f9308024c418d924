#pragma once

#include <cstdint>

namespace lossgate {

// Per-batch cost of a forward and a backward pass, in arbitrary time units.
struct TimingModel {
  double t_forward = 1.0;
  double t_backward = 2.0;
};

// alpha_b: batches that ran forward only; alpha_fb: batches that ran nothing.
struct SkipFractions {
  double alpha_b = 0.0;
  double alpha_fb = 0.0;
};

struct AgotParams {
  double epsilon = 0.95;
  double a_base = 0.0;
  double a_full = 1.0;
};

// Average power draws in watts; `hours` of training.
struct EnergyParams {
  double cpu_watts = 0.0;
  double dram_watts = 0.0;
  double gpu_watts = 0.0;
  double gpu_count = 0.0;
  double hours = 0.0;
  double pue = 1.58;
  double co2_lbs_per_kwh = 0.954;
};

struct EnergyEstimate {
  double kwh = 0.0;
  double co2e_lbs = 0.0;
};

// num_batches * [alpha_b * T_f + (1 - alpha_b - alpha_fb) * (T_f + T_b)].
double total_time(const SkipFractions& fractions, const TimingModel& timing,
                  std::uint64_t num_batches);

double t_norm(double t_ours, double t_all);

// Normalized accuracy gain divided by T_norm^(1 - epsilon).
double agot(double accuracy, double t_norm, const AgotParams& params);

// p_t = pue * hours * (cpu + dram + gpu_count * gpu) / 1000, CO2e = k * p_t.
EnergyEstimate energy_co2(const EnergyParams& params);

SkipFractions skip_fractions(std::uint64_t backward_skipped,
                             std::uint64_t forward_skipped,
                             std::uint64_t batches_total);

}  // namespace lossgate
