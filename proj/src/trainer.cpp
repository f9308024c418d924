#include "lossgate/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "lossgate/error.hpp"

namespace lossgate {

namespace {

constexpr std::uint64_t kSkipStream = 0x736b6970;  // "skip"

class OverheadTimer {
 public:
  explicit OverheadTimer(double& sink)
      : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  ~OverheadTimer() {
    sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                 .count();
  }
  OverheadTimer(const OverheadTimer&) = delete;
  OverheadTimer& operator=(const OverheadTimer&) = delete;

 private:
  double& sink_;
  std::chrono::steady_clock::time_point start_;
};

std::string format_optional(const std::optional<double>& v) {
  if (!v) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  return buf;
}

}  // namespace

Mode parse_mode(std::string_view name) {
  if (name == "three-stage") return Mode::kThreeStage;
  if (name == "train-all") return Mode::kTrainAll;
  if (name == "fixed-threshold") return Mode::kFixedThreshold;
  if (name == "auto-threshold") return Mode::kAutoThresholdOnly;
  if (name == "random-skip") return Mode::kRandomSkip;
  throw UsageError("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kThreeStage: return "three-stage";
    case Mode::kTrainAll: return "train-all";
    case Mode::kFixedThreshold: return "fixed-threshold";
    case Mode::kAutoThresholdOnly: return "auto-threshold";
    case Mode::kRandomSkip: return "random-skip";
  }
  return "?";
}

std::string_view to_string(Decision d) {
  switch (d) {
    case Decision::kFull: return "full";
    case Decision::kForwardOnly: return "forward_only";
    case Decision::kSkipped: return "skipped";
  }
  return "?";
}

void TrainerConfig::validate() const {
  if (!(n0_fraction > 0.0 && n0_fraction <= 1.0)) {
    throw UsageError("n0 must lie in (0, 1]");
  }
  if (threshold_window == 0) throw UsageError("K must be positive");
  if (predictor_window == 0) throw UsageError("W must be positive");
  if (!(alt > 0.0)) throw UsageError("alt must be positive");
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (batch_size == 0) throw UsageError("batch_size must be positive");
  if (!(variance_tolerance >= 0.0)) throw UsageError("variance_tolerance must be >= 0");
  if (!(skip_margin > 0.0)) throw UsageError("skip_margin_gamma must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (!(nb_alpha > 0.0)) throw UsageError("nb_alpha must be positive");
  if (!(random_ratio >= 0.0 && random_ratio < 1.0)) {
    throw UsageError("random skip ratio must lie in [0, 1)");
  }
  if (!(timing.t_forward > 0.0) || !(timing.t_backward > 0.0)) {
    throw UsageError("t_forward and t_backward must be positive");
  }
  if (!(agot_epsilon >= 0.0 && agot_epsilon <= 1.0)) {
    throw UsageError("epsilon must lie in [0, 1]");
  }
  if (!(seconds_per_time_unit >= 0.0)) {
    throw UsageError("seconds_per_time_unit must be non-negative");
  }
}

std::string trace_header() { return "epoch,batch,stage,decision,loss,predictor_p1"; }

std::string format_trace_line(const StepTrace& t) {
  std::string line = std::to_string(t.epoch) + ',' + std::to_string(t.batch) + ',' +
                     std::to_string(static_cast<int>(t.stage)) + ',' +
                     std::string(to_string(t.decision)) + ',' +
                     format_optional(t.loss) + ',' + format_optional(t.predictor_p1);
  return line;
}

TrainerState::TrainerState(const TrainerConfig& config)
    : threshold(config.threshold_window,
                config.mode == Mode::kFixedThreshold ? 1.0 : config.skip_margin),
      predictor(config.nb_alpha),
      predictor_window(config.predictor_window) {}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) {
  return derive_seed(seed, epoch + 1);
}

Trainer::Trainer(TrainerConfig config, std::size_t batches_per_epoch)
    : config_(std::move(config)),
      batches_per_epoch_(batches_per_epoch),
      state_(config_),
      model_(config_.learning_rate),
      skip_rng_(derive_seed(config_.seed, kSkipStream)) {
  config_.validate();
  if (batches_per_epoch_ == 0) throw Error("dataset is empty");
  if (config_.mode == Mode::kFixedThreshold) {
    state_.threshold.pin(config_.fixed_threshold);
    state_.stage = Stage::kBackwardFilter;
  }
}

bool Trainer::predictor_enabled() const {
  return config_.mode == Mode::kThreeStage;
}

std::uint64_t Trainer::warmup_budget() const {
  const double budget =
      std::ceil(config_.n0_fraction * static_cast<double>(batches_per_epoch_) - 1e-9);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(budget));
}

void Trainer::begin_epoch(std::size_t epoch) {
  state_.epoch_index = epoch;
  batch_in_epoch_ = 0;
}

StepTrace Trainer::begin_trace(const MiniBatch& batch) const {
  StepTrace t;
  t.epoch = state_.epoch_index;
  t.batch = batch.index;
  t.stage = state_.stage;
  return t;
}

void Trainer::run_backward(const ForwardResult& fr, const MiniBatch& batch) {
  backward(model_, fr, batch);
  ++state_.full_steps;
  if (config_.record_backward) {
    backward_log_.push_back({state_.epoch_index, batch.index});
  }
}

StepTrace Trainer::step(const MiniBatch& batch) {
  StepTrace t;
  switch (config_.mode) {
    case Mode::kTrainAll: t = step_train_all(batch); break;
    case Mode::kRandomSkip: t = step_random(batch); break;
    case Mode::kFixedThreshold: t = step_stage1(batch); break;
    case Mode::kThreeStage:
    case Mode::kAutoThresholdOnly:
      switch (state_.stage) {
        case Stage::kWarmup: t = step_stage0(batch); break;
        case Stage::kBackwardFilter: t = step_stage1(batch); break;
        case Stage::kFullFilter: t = step_stage2(batch); break;
      }
      break;
  }
  ++batch_in_epoch_;
  maybe_transition();
  return t;
}

StepTrace Trainer::step_train_all(const MiniBatch& batch) {
  StepTrace t = begin_trace(batch);
  const ForwardResult fr = forward(model_, batch);
  run_backward(fr, batch);
  ++state_.batches_seen;
  t.loss = fr.batch_loss;
  return t;
}

StepTrace Trainer::step_random(const MiniBatch& batch) {
  StepTrace t = begin_trace(batch);
  ++state_.batches_seen;
  if (skip_rng_.bernoulli(config_.random_ratio)) {
    ++state_.forward_skipped;
    t.decision = Decision::kSkipped;
    return t;
  }
  const ForwardResult fr = forward(model_, batch);
  run_backward(fr, batch);
  t.loss = fr.batch_loss;
  return t;
}

StepTrace Trainer::step_stage0(const MiniBatch& batch) {
  if (state_.stage != Stage::kWarmup) throw Error("step_stage0 outside stage 0");
  StepTrace t = begin_trace(batch);
  const ForwardResult fr = forward(model_, batch);
  run_backward(fr, batch);
  {
    OverheadTimer timer(overhead_seconds_);
    state_.threshold.observe_loss(fr.batch_loss);
  }
  ++state_.batches_seen;
  t.loss = fr.batch_loss;
  return t;
}

StepTrace Trainer::step_stage1(const MiniBatch& batch) {
  if (state_.stage != Stage::kBackwardFilter) throw Error("step_stage1 outside stage 1");
  if (!state_.threshold.frozen()) throw Error("stage 1 requires a frozen threshold");
  StepTrace t = begin_trace(batch);
  const ForwardResult fr = forward(model_, batch);
  t.loss = fr.batch_loss;
  int label = 0;
  {
    OverheadTimer timer(overhead_seconds_);
    label = make_label(fr.batch_loss, state_.threshold.effective_threshold());
    if (predictor_enabled()) {
      // Loss is measured before the predictor sees this batch.
      if (!state_.predictor.empty()) {
        state_.predictor_window.push(predictor_loss(state_.predictor, batch, label));
      }
      state_.predictor.update(batch, label);
    }
  }
  if (label == 1) {
    run_backward(fr, batch);
    t.decision = Decision::kFull;
  } else {
    ++state_.backward_skipped;
    t.decision = Decision::kForwardOnly;
  }
  ++state_.batches_seen;
  return t;
}

StepTrace Trainer::step_stage2(const MiniBatch& batch) {
  if (state_.stage != Stage::kFullFilter) throw Error("step_stage2 outside stage 2");
  StepTrace t = begin_trace(batch);
  BatchPrediction pred;
  {
    OverheadTimer timer(overhead_seconds_);
    pred = nb_predict_batch(state_.predictor, batch, config_.batch_policy);
  }
  t.predictor_p1 = pred.mean_p1;
  ++state_.batches_seen;
  if (pred.decision == 0) {
    ++state_.forward_skipped;
    t.decision = Decision::kSkipped;
    return t;
  }
  const ForwardResult fr = forward(model_, batch);
  t.loss = fr.batch_loss;
  int label = 0;
  {
    OverheadTimer timer(overhead_seconds_);
    label = make_label(fr.batch_loss, state_.threshold.effective_threshold());
    state_.predictor.update(batch, label);
  }
  if (label == 1) {
    run_backward(fr, batch);
    t.decision = Decision::kFull;
  } else {
    ++state_.backward_skipped;
    t.decision = Decision::kForwardOnly;
  }
  return t;
}

void Trainer::enter(Stage next) {
  StageBoundary b;
  b.from = state_.stage;
  b.to = next;
  b.epoch = state_.epoch_index;
  b.batch = batch_in_epoch_;
  if (b.batch >= batches_per_epoch_) {
    ++b.epoch;
    b.batch = 0;
  }
  b.global_batch = state_.batches_seen;
  state_.boundaries.push_back(b);
  state_.stage = next;
}

void Trainer::maybe_transition() {
  if (config_.mode != Mode::kThreeStage && config_.mode != Mode::kAutoThresholdOnly) {
    return;
  }
  if (state_.stage == Stage::kWarmup) {
    if (state_.batches_seen >= warmup_budget() && state_.threshold.window_full()) {
      state_.freeze_variance = state_.threshold.variance();
      if (config_.forced_threshold) {
        state_.threshold.pin(*config_.forced_threshold);
      } else {
        state_.threshold.freeze();
      }
      enter(Stage::kBackwardFilter);
    }
    return;
  }
  if (state_.stage == Stage::kBackwardFilter && predictor_enabled() &&
      !config_.disable_predictor) {
    const auto mean = state_.predictor_window.mean();
    if (mean && *mean < config_.alt) enter(Stage::kFullFilter);
  }
}

RunReport run(const TrainerConfig& config, std::span<const Example> train,
              std::span<const Example> test, const RunOptions& options) {
  if (train.empty()) throw Error("dataset is empty");
  if (test.empty()) test = train;
  const std::size_t per_epoch = batch_count(train.size(), config.batch_size);
  Trainer trainer(config, per_epoch);

  RunReport report;
  report.mode = std::string(to_string(config.mode));
  report.a_base = evaluate(trainer.model(), test);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    trainer.begin_epoch(epoch);
    const auto batches =
        make_batches(train, config.batch_size, epoch_seed(config.seed, epoch),
                     config.shuffle);
    for (const auto& batch : batches) {
      const StepTrace t = trainer.step(batch);
      if (options.on_step) options.on_step(t);
    }
    if (config.eval_every_epoch) {
      report.epoch_accuracies.push_back(evaluate(trainer.model(), test));
    }
  }

  const TrainerState& s = trainer.state();
  report.accuracy = evaluate(trainer.model(), test);
  report.batches_total = s.batches_seen;
  report.full_steps = s.full_steps;
  report.backward_skipped = s.backward_skipped;
  report.forward_skipped = s.forward_skipped;
  const SkipFractions f =
      skip_fractions(s.backward_skipped, s.forward_skipped, s.batches_seen);
  report.alpha_b = f.alpha_b;
  report.alpha_fb = f.alpha_fb;
  report.time = total_time(f, config.timing, s.batches_seen);
  report.time_all = total_time({}, config.timing, s.batches_seen);
  report.t_norm = t_norm(report.time, report.time_all);

  report.a_full = config.mode == Mode::kTrainAll ? std::optional(report.accuracy)
                                                 : options.a_full;
  if (report.a_full && *report.a_full != report.a_base && report.t_norm > 0.0) {
    report.agot = agot(report.accuracy, report.t_norm,
                       {config.agot_epsilon, report.a_base, *report.a_full});
  }

  EnergyParams energy = config.energy;
  energy.hours = report.time * config.seconds_per_time_unit / 3600.0;
  const EnergyEstimate e = energy_co2(energy);
  report.energy_kwh = e.kwh;
  report.co2e_lbs = e.co2e_lbs;

  report.final_stage = static_cast<int>(s.stage);
  report.stage_boundaries = s.boundaries;
  report.l_low = s.threshold.low();
  report.freeze_variance = s.freeze_variance;
  report.threshold_stable_at_freeze =
      s.freeze_variance && *s.freeze_variance <= config.variance_tolerance;
  report.overhead_seconds = trainer.overhead_seconds();
  report.backward_log = trainer.backward_log();
  report.config = config;
  report.model = trainer.model();
  report.predictor = s.predictor;
  return report;
}

RunReport run_random_skip(TrainerConfig config, std::span<const Example> train,
                          std::span<const Example> test, double target_ratio,
                          const RunOptions& options) {
  config.mode = Mode::kRandomSkip;
  config.random_ratio = target_ratio;
  return run(config, train, test, options);
}

TargetModel replay_backward(const TrainerConfig& config, std::span<const Example> train,
                            std::span<const BackwardRecord> log) {
  TargetModel model(config.learning_rate);
  std::optional<std::size_t> loaded_epoch;
  std::vector<MiniBatch> batches;
  for (const auto& rec : log) {
    if (loaded_epoch != rec.epoch) {
      batches = make_batches(train, config.batch_size, epoch_seed(config.seed, rec.epoch),
                             config.shuffle);
      loaded_epoch = rec.epoch;
    }
    const MiniBatch& batch = batches.at(rec.batch);
    backward(model, forward(model, batch), batch);
  }
  return model;
}

}  // namespace lossgate
