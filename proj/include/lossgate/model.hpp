#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lossgate/data.hpp"

namespace lossgate {

// Binary logistic regression over the hashed bag-of-words space. Stands in
// for the finetuned network: the filtering machinery only ever sees the
// scalar batch loss, and forward/backward are separate calls so either can be
// skipped.
class TargetModel {
 public:
  explicit TargetModel(double learning_rate = 0.5);

  double learning_rate() const { return learning_rate_; }
  std::uint64_t step_count() const { return step_count_; }
  // Bumped on every mutation; a ForwardResult remembers the version it saw.
  std::uint64_t version() const { return version_; }

  double bias() const { return bias_; }
  std::span<const double> weights() const { return weights_; }

  double weight(std::uint32_t bucket) const { return weights_.at(bucket); }
  void set_weight(std::uint32_t bucket, double value);
  void set_bias(double value);

  // Raw score; p(class 1) = sigmoid(logit).
  double logit(const BowVector& x) const;

  // Used by backward(); exposed for replay and checkpoint loading.
  void apply_step(std::span<const std::pair<std::uint32_t, double>> weight_delta,
                  double bias_delta);
  void set_step_count(std::uint64_t n) { step_count_ = n; ++version_; }

  friend bool operator==(const TargetModel& a, const TargetModel& b) {
    return a.bias_ == b.bias_ && a.step_count_ == b.step_count_ &&
           a.weights_ == b.weights_;
  }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
  double learning_rate_;
  std::uint64_t step_count_ = 0;
  std::uint64_t version_ = 0;
};

struct ForwardResult {
  std::vector<double> per_example_losses;
  // p(class 1 | x) for each example; doubles as the activation cache for the
  // backward pass.
  std::vector<double> per_example_probs;
  double batch_loss = 0.0;

  std::uint64_t model_version = 0;
  std::size_t batch_index = 0;
  std::size_t batch_size = 0;
};

struct Gradient {
  // Sorted by bucket, one entry per bucket present in the batch.
  std::vector<std::pair<std::uint32_t, double>> weights;
  double bias = 0.0;
};

// Numerically stable log(1 + exp(x)).
double softplus(double x);
double sigmoid(double x);

// Cross-entropy of one example given its logit.
double cross_entropy(double logit, int label);

ForwardResult forward(const TargetModel& model, const MiniBatch& batch);

// Gradient of the mean batch loss, computed from the forward cache.
Gradient gradient(const ForwardResult& result, const MiniBatch& batch);

// One plain SGD step. Throws if `result` was produced against a different
// model version or batch.
void backward(TargetModel& model, const ForwardResult& result,
              const MiniBatch& batch);

// Argmax accuracy; ties (p = 0.5) go to class 0.
double evaluate(const TargetModel& model, std::span<const Example> examples);

int predict(const TargetModel& model, const BowVector& x);

// Checkpoint: {"format", "dimension", "bias", "step_count", "learning_rate",
// "weights": [[bucket, weight], ...]} with zero weights omitted.
nlohmann::json model_to_json(const TargetModel& model);
TargetModel model_from_json(const nlohmann::json& j);
void save_model(const TargetModel& model, const std::filesystem::path& path);
TargetModel load_model(const std::filesystem::path& path);

}  // namespace lossgate
