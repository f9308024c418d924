#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lossgate/data.hpp"
#include "lossgate/threshold.hpp"

namespace lossgate {

// Train-worthiness label: 1 iff batch_loss >= threshold. Exact complement of
// ThresholdState::should_skip_backward for the same threshold.
int make_label(double batch_loss, double threshold);

// Bernoulli Naive Bayes over hashed bag-of-words presence bits, trained
// online. Laplace smoothing `alpha` applies to the class prior and to each
// per-class bucket probability
//   theta[c][b] = (count[c][b] + alpha) / (class_count[c] + 2 alpha).
// Absent-feature factors are taken over buckets the model has observed only;
// never-seen buckets contribute identical factors to both classes.
class NaiveBayesModel {
 public:
  explicit NaiveBayesModel(double alpha = 1.0);

  double alpha() const { return alpha_; }
  std::uint64_t class_count(int c) const { return class_counts_.at(c); }
  std::uint64_t token_count(int c, std::uint32_t bucket) const;
  const std::map<std::uint32_t, std::uint64_t>& token_counts(int c) const {
    return token_counts_.at(c);
  }
  // Number of distinct buckets observed under either class.
  std::size_t vocabulary_size() const { return vocab_.size(); }
  bool empty() const { return class_counts_[0] + class_counts_[1] == 0; }
  bool has_both_classes() const {
    return class_counts_[0] > 0 && class_counts_[1] > 0;
  }

  void update(std::span<const BowVector> features, int label);
  void update(const MiniBatch& batch, int label);

  // Log joint score log P(c) + log P(x | c) up to the shared constant.
  double log_joint(const BowVector& x, int c) const;
  // P(y' = 1 | x). Throws "untrained predictor" on an empty model.
  double posterior(const BowVector& x) const;

  friend bool operator==(const NaiveBayesModel& a, const NaiveBayesModel& b) {
    return a.alpha_ == b.alpha_ && a.class_counts_ == b.class_counts_ &&
           a.token_counts_ == b.token_counts_;
  }

 private:
  void refresh_cache();

  double alpha_;
  std::array<std::uint64_t, 2> class_counts_{0, 0};
  std::array<std::map<std::uint32_t, std::uint64_t>, 2> token_counts_;
  std::set<std::uint32_t> vocab_;

  // Derived from the counts after every update so that queries stay const.
  std::array<double, 2> log_prior_{0.0, 0.0};
  std::array<double, 2> absent_sum_{0.0, 0.0};  // sum_b log(1 - theta[c][b])
};

// Free-function surface mirroring the operations table.
inline void nb_update(NaiveBayesModel& model, std::span<const BowVector> features,
                      int label) {
  model.update(features, label);
}
inline double nb_posterior(const NaiveBayesModel& model, const BowVector& x) {
  return model.posterior(x);
}

enum class BatchPolicy { kMeanPosterior, kMajorityVote };

BatchPolicy parse_batch_policy(std::string_view name);
std::string_view to_string(BatchPolicy policy);

struct BatchPrediction {
  int decision = 1;
  // Mean per-example posterior; empty when the model could not be queried.
  std::optional<double> mean_p1;
  // True when the model lacks one of the classes and the decision defaulted
  // to train-worthy.
  bool fail_open = false;
};

BatchPrediction nb_predict_batch(const NaiveBayesModel& model,
                                 std::span<const BowVector> batch_features,
                                 BatchPolicy policy = BatchPolicy::kMeanPosterior);
BatchPrediction nb_predict_batch(const NaiveBayesModel& model,
                                 const MiniBatch& batch,
                                 BatchPolicy policy = BatchPolicy::kMeanPosterior);

// Mean negative log posterior of the true train-worthiness labels.
double predictor_loss(const NaiveBayesModel& model,
                      std::span<const BowVector> batch_features,
                      std::span<const int> labels);
// Same, with one label broadcast over the whole batch.
double predictor_loss(const NaiveBayesModel& model, const MiniBatch& batch,
                      int label);

// Window over recent predictor losses; gates the move into the last stage.
class PredictorLossWindow {
 public:
  explicit PredictorLossWindow(std::size_t size) : window_(size) {}
  void push(double loss) { window_.push(loss); }
  bool full() const { return window_.full(); }
  std::size_t size() const { return window_.size(); }
  std::size_t capacity() const { return window_.capacity(); }
  std::optional<double> mean() const {
    if (!window_.full()) return std::nullopt;
    return window_.mean();
  }

 private:
  RingWindow window_;
};

// Checkpoint: {"alpha", "class_counts": [n0, n1],
// "token_counts": [[[bucket, count], ...], [[bucket, count], ...]]}.
nlohmann::json predictor_to_json(const NaiveBayesModel& model);
NaiveBayesModel predictor_from_json(const nlohmann::json& j);
void save_predictor(const NaiveBayesModel& model, const std::filesystem::path& path);

}  // namespace lossgate
