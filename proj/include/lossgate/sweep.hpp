#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lossgate/trainer.hpp"

namespace lossgate {

// Hyperparameter grid. ThreeStage runs cover n0 x W x alt, FixedThreshold
// runs cover `fixed_thresholds`; both are crossed with epochs and seeds. A
// TrainAll run per (epochs, seed) supplies a_full for AGOT.
struct SweepSpec {
  TrainerConfig base;
  std::vector<double> n0{0.1, 0.2, 0.3, 0.4};
  std::vector<std::size_t> W{4, 8, 16};
  std::vector<double> alt{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<double> fixed_thresholds{0.1, 0.3, 0.5, 0.7};
  std::vector<std::size_t> epochs{1};
  std::vector<std::uint64_t> seeds{0};
  std::size_t max_runs = 5000;

  std::size_t run_count() const;
  void validate() const;
};

struct SweepRow {
  std::string kind;  // "run" or "mean"
  TrainerConfig config;
  std::size_t seeds = 1;
  double accuracy = 0.0;
  std::optional<double> accuracy_std;
  double alpha_b = 0.0;
  double alpha_fb = 0.0;
  double time = 0.0;
  double t_norm = 0.0;
  std::optional<double> t_norm_std;
  std::optional<double> agot;
  int final_stage = 0;
  bool agot_optimal = false;
};

struct SweepResult {
  // Grid order: epochs, then configuration, then seed; each configuration's
  // seed-averaged "mean" row follows its runs.
  std::vector<SweepRow> rows;
  std::optional<std::size_t> optimal;
};

// LOSSGATE_THREADS if set and positive, else the hardware concurrency.
std::size_t default_threads();

SweepResult run_sweep(const SweepSpec& spec, std::span<const Example> train,
                      std::span<const Example> test, std::size_t threads);

// Orders rows for the AGOT-optimal pick: higher AGOT, then lower T_norm,
// then the lexicographically smaller configuration key.
std::optional<std::size_t> agot_optimal(std::span<const SweepRow> rows);
std::string config_key(const TrainerConfig& config);

std::string sweep_csv_header();
std::string sweep_csv(const SweepResult& result);

struct CompareRow {
  std::string method;
  // For random-skip rows: the method whose realized skip ratio was matched.
  std::string matched_to;
  std::optional<double> target_ratio;
  std::size_t seeds = 0;
  double accuracy_mean = 0.0;
  std::optional<double> accuracy_std;
  double t_norm_mean = 0.0;
  std::optional<double> t_norm_std;
  double skip_mean = 0.0;
  std::optional<double> agot_mean;
};

// TrainAll, ThreeStage, AutoThresholdOnly and FixedThreshold at each
// threshold, each filtering method followed by RandomSkip at its per-seed
// realized alpha_b + alpha_fb.
std::vector<CompareRow> run_compare(const TrainerConfig& base,
                                    std::span<const std::uint64_t> seeds,
                                    std::span<const double> fixed_thresholds,
                                    std::span<const Example> train,
                                    std::span<const Example> test, std::size_t threads);

std::string compare_csv_header();
std::string compare_csv(std::span<const CompareRow> rows);

// Sample standard deviation (n - 1); empty for fewer than two values.
std::optional<double> sample_std(std::span<const double> values);

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace lossgate
