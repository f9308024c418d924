#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lossgate/data.hpp"
#include "lossgate/metapredictor.hpp"
#include "lossgate/metrics.hpp"
#include "lossgate/model.hpp"
#include "lossgate/rng.hpp"
#include "lossgate/threshold.hpp"

namespace lossgate {

enum class Stage : int { kWarmup = 0, kBackwardFilter = 1, kFullFilter = 2 };

enum class Mode {
  kThreeStage,
  kTrainAll,
  kFixedThreshold,
  kAutoThresholdOnly,
  kRandomSkip,
};

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct TrainerConfig {
  Mode mode = Mode::kThreeStage;

  // Stage-0 budget as a fraction of the batches in one epoch.
  double n0_fraction = 0.1;
  // K: batches averaged into the loss threshold.
  std::size_t threshold_window = 64;
  // W: predictor losses averaged for the stage 1 -> 2 check.
  std::size_t predictor_window = 8;
  // ALT: stage 2 starts once the windowed predictor loss drops below this.
  double alt = 0.3;
  double variance_tolerance = 1e-4;
  // gamma: backward is skipped iff loss < gamma * L_low.
  double skip_margin = 1.0;

  std::size_t epochs = 1;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  bool shuffle = true;
  double learning_rate = 0.1;

  double nb_alpha = 1.0;
  BatchPolicy batch_policy = BatchPolicy::kMeanPosterior;

  double fixed_threshold = 0.3;  // FixedThreshold mode
  double random_ratio = 0.0;     // RandomSkip mode

  TimingModel timing;
  // Energy model inputs; `hours` is derived from T * seconds_per_time_unit.
  EnergyParams energy{.cpu_watts = 100.0, .dram_watts = 30.0, .gpu_watts = 250.0,
                      .gpu_count = 1.0};
  double seconds_per_time_unit = 1.0;
  double agot_epsilon = 0.95;

  bool eval_every_epoch = false;
  // Keep the (epoch, batch) list of backward passes in the report.
  bool record_backward = false;

  // Test hooks: replace L_low at the stage 0 -> 1 switch, and keep the run
  // out of stage 2.
  std::optional<double> forced_threshold;
  bool disable_predictor = false;

  void validate() const;
};

enum class Decision { kFull, kForwardOnly, kSkipped };

std::string_view to_string(Decision d);

struct StepTrace {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  Stage stage = Stage::kWarmup;
  Decision decision = Decision::kFull;
  std::optional<double> loss;
  std::optional<double> predictor_p1;
};

// `epoch,batch,stage,decision,loss,predictor_p1`; absent values are empty.
std::string trace_header();
std::string format_trace_line(const StepTrace& t);

struct StageBoundary {
  Stage from = Stage::kWarmup;
  Stage to = Stage::kBackwardFilter;
  std::size_t epoch = 0;
  // First batch (within the epoch) processed in the new stage.
  std::size_t batch = 0;
  std::uint64_t global_batch = 0;
};

struct TrainerState {
  explicit TrainerState(const TrainerConfig& config);

  Stage stage = Stage::kWarmup;
  std::uint64_t batches_seen = 0;
  std::uint64_t full_steps = 0;
  std::uint64_t backward_skipped = 0;
  std::uint64_t forward_skipped = 0;
  std::size_t epoch_index = 0;

  ThresholdState threshold;
  NaiveBayesModel predictor;
  PredictorLossWindow predictor_window;

  std::vector<StageBoundary> boundaries;
  // Window variance at the moment L_low was frozen (diagnostic only).
  std::optional<double> freeze_variance;
};

struct BackwardRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  friend bool operator==(const BackwardRecord&, const BackwardRecord&) = default;
};

// Drives one training run batch by batch. Strictly sequential.
class Trainer {
 public:
  Trainer(TrainerConfig config, std::size_t batches_per_epoch);

  const TrainerConfig& config() const { return config_; }
  const TrainerState& state() const { return state_; }
  const TargetModel& model() const { return model_; }
  std::size_t batches_per_epoch() const { return batches_per_epoch_; }
  const std::vector<BackwardRecord>& backward_log() const { return backward_log_; }
  double overhead_seconds() const { return overhead_seconds_; }

  void begin_epoch(std::size_t epoch);

  // Processes one batch according to mode and stage, then checks for a stage
  // transition.
  StepTrace step(const MiniBatch& batch);

  StepTrace step_stage0(const MiniBatch& batch);
  StepTrace step_stage1(const MiniBatch& batch);
  StepTrace step_stage2(const MiniBatch& batch);
  StepTrace step_train_all(const MiniBatch& batch);
  StepTrace step_random(const MiniBatch& batch);

  void maybe_transition();

  // Number of stage-0 batches required before L_low may be frozen.
  std::uint64_t warmup_budget() const;

 private:
  StepTrace begin_trace(const MiniBatch& batch) const;
  void run_backward(const ForwardResult& fr, const MiniBatch& batch);
  void enter(Stage next);
  bool predictor_enabled() const;

  TrainerConfig config_;
  std::size_t batches_per_epoch_;
  TrainerState state_;
  TargetModel model_;
  Rng skip_rng_;
  std::size_t batch_in_epoch_ = 0;
  std::vector<BackwardRecord> backward_log_;
  double overhead_seconds_ = 0.0;
};

struct RunReport {
  std::string mode;
  double accuracy = 0.0;
  double a_base = 0.0;
  std::optional<double> a_full;
  std::vector<double> epoch_accuracies;

  std::uint64_t batches_total = 0;
  std::uint64_t full_steps = 0;
  std::uint64_t backward_skipped = 0;
  std::uint64_t forward_skipped = 0;
  double alpha_b = 0.0;
  double alpha_fb = 0.0;

  double time = 0.0;      // T
  double time_all = 0.0;  // T of TrainAll over the same batches
  double t_norm = 1.0;
  std::optional<double> agot;
  double energy_kwh = 0.0;
  double co2e_lbs = 0.0;

  int final_stage = 0;
  std::vector<StageBoundary> stage_boundaries;
  std::optional<double> l_low;
  std::optional<double> freeze_variance;
  bool threshold_stable_at_freeze = false;

  // Wall-clock seconds spent in threshold and predictor bookkeeping. Not part
  // of the analytic time model and not deterministic.
  double overhead_seconds = 0.0;

  std::vector<BackwardRecord> backward_log;
  TrainerConfig config;
  TargetModel model;
  NaiveBayesModel predictor;
};

struct RunOptions {
  // TrainAll accuracy for AGOT; TrainAll runs use their own accuracy.
  std::optional<double> a_full;
  std::function<void(const StepTrace&)> on_step;
};

RunReport run(const TrainerConfig& config, std::span<const Example> train,
              std::span<const Example> test, const RunOptions& options = {});

RunReport run_random_skip(TrainerConfig config, std::span<const Example> train,
                          std::span<const Example> test, double target_ratio,
                          const RunOptions& options = {});

// Replays only the logged backward-receiving batches through plain SGD.
TargetModel replay_backward(const TrainerConfig& config,
                            std::span<const Example> train,
                            std::span<const BackwardRecord> log);

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch);

}  // namespace lossgate
