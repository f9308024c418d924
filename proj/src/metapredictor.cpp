#include "lossgate/metapredictor.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lossgate/error.hpp"

namespace lossgate {

namespace {

void check_label(int label) {
  if (label != 0 && label != 1) throw Error("predictor label must be 0 or 1");
}

double log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

std::vector<BowVector> features_of(const MiniBatch& batch) {
  std::vector<BowVector> out;
  out.reserve(batch.size());
  for (std::size_t n = 0; n < batch.size(); ++n) out.push_back(batch[n].features);
  return out;
}

}  // namespace

int make_label(double batch_loss, double threshold) {
  return batch_loss >= threshold ? 1 : 0;
}

NaiveBayesModel::NaiveBayesModel(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw UsageError("Naive Bayes smoothing alpha must be positive");
  }
  refresh_cache();
}

std::uint64_t NaiveBayesModel::token_count(int c, std::uint32_t bucket) const {
  const auto& counts = token_counts_.at(c);
  const auto it = counts.find(bucket);
  return it == counts.end() ? 0 : it->second;
}

void NaiveBayesModel::update(std::span<const BowVector> features, int label) {
  check_label(label);
  if (features.empty()) return;
  auto& counts = token_counts_[label];
  for (const auto& x : features) {
    for (auto b : x.buckets) {
      ++counts[b];
      vocab_.insert(b);
    }
  }
  class_counts_[label] += features.size();
  refresh_cache();
}

void NaiveBayesModel::update(const MiniBatch& batch, int label) {
  const auto features = features_of(batch);
  update(features, label);
}

void NaiveBayesModel::refresh_cache() {
  const double total = static_cast<double>(class_counts_[0] + class_counts_[1]);
  for (int c = 0; c < 2; ++c) {
    const double n_c = static_cast<double>(class_counts_[c]);
    log_prior_[c] = std::log((n_c + alpha_) / (total + 2.0 * alpha_));
    const double denom = n_c + 2.0 * alpha_;
    double sum = 0.0;
    for (auto b : vocab_) {
      const double theta = (static_cast<double>(token_count(c, b)) + alpha_) / denom;
      sum += std::log1p(-theta);
    }
    absent_sum_[c] = sum;
  }
}

double NaiveBayesModel::log_joint(const BowVector& x, int c) const {
  check_label(c);
  const double denom = static_cast<double>(class_counts_[c]) + 2.0 * alpha_;
  double score = log_prior_[c] + absent_sum_[c];
  for (auto b : x.buckets) {
    if (!vocab_.contains(b)) continue;
    const double theta = (static_cast<double>(token_count(c, b)) + alpha_) / denom;
    score += std::log(theta) - std::log1p(-theta);
  }
  return score;
}

double NaiveBayesModel::posterior(const BowVector& x) const {
  if (empty()) throw Error("untrained predictor");
  // p1 = 1 / (1 + exp(s0 - s1))
  const double diff = log_joint(x, 0) - log_joint(x, 1);
  if (diff > 0.0) {
    const double e = std::exp(-diff);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(diff));
}

BatchPolicy parse_batch_policy(std::string_view name) {
  if (name == "mean") return BatchPolicy::kMeanPosterior;
  if (name == "majority") return BatchPolicy::kMajorityVote;
  throw UsageError("unknown batch policy '" + std::string(name) + "'");
}

std::string_view to_string(BatchPolicy policy) {
  return policy == BatchPolicy::kMeanPosterior ? "mean" : "majority";
}

BatchPrediction nb_predict_batch(const NaiveBayesModel& model,
                                 std::span<const BowVector> batch_features,
                                 BatchPolicy policy) {
  BatchPrediction out;
  if (batch_features.empty()) return out;
  if (!model.empty()) {
    double sum = 0.0;
    std::size_t votes = 0;
    for (const auto& x : batch_features) {
      const double p1 = model.posterior(x);
      sum += p1;
      if (p1 >= 0.5) ++votes;
    }
    out.mean_p1 = sum / static_cast<double>(batch_features.size());
    if (model.has_both_classes()) {
      out.decision = policy == BatchPolicy::kMeanPosterior
                         ? (*out.mean_p1 >= 0.5 ? 1 : 0)
                         : (2 * votes >= batch_features.size() ? 1 : 0);
      return out;
    }
  }
  out.decision = 1;
  out.fail_open = true;
  return out;
}

BatchPrediction nb_predict_batch(const NaiveBayesModel& model,
                                 const MiniBatch& batch, BatchPolicy policy) {
  const auto features = features_of(batch);
  return nb_predict_batch(model, features, policy);
}

double predictor_loss(const NaiveBayesModel& model,
                      std::span<const BowVector> batch_features,
                      std::span<const int> labels) {
  if (batch_features.size() != labels.size()) {
    throw Error("predictor_loss: features and labels differ in length");
  }
  if (batch_features.empty()) throw Error("predictor_loss on an empty batch");
  if (model.empty()) throw Error("untrained predictor");
  double sum = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    check_label(labels[n]);
    // -log p(y | x) = log(1 + exp(s_other - s_y)), evaluated from log-odds.
    const double s0 = model.log_joint(batch_features[n], 0);
    const double s1 = model.log_joint(batch_features[n], 1);
    sum += labels[n] == 1 ? log1pexp(s0 - s1) : log1pexp(s1 - s0);
  }
  return sum / static_cast<double>(labels.size());
}

double predictor_loss(const NaiveBayesModel& model, const MiniBatch& batch,
                      int label) {
  const auto features = features_of(batch);
  const std::vector<int> labels(features.size(), label);
  return predictor_loss(model, features, labels);
}

nlohmann::json predictor_to_json(const NaiveBayesModel& model) {
  nlohmann::json counts = nlohmann::json::array();
  for (int c = 0; c < 2; ++c) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& [bucket, n] : model.token_counts(c)) per_class.push_back({bucket, n});
    counts.push_back(std::move(per_class));
  }
  return {{"alpha", model.alpha()},
          {"class_counts", {model.class_count(0), model.class_count(1)}},
          {"token_counts", std::move(counts)}};
}

NaiveBayesModel predictor_from_json(const nlohmann::json& j) {
  try {
    NaiveBayesModel model(j.at("alpha").get<double>());
    // Rebuild through update() so the derived caches and invariants hold:
    // replay each class as `class_count` presence vectors.
    for (int c = 0; c < 2; ++c) {
      const auto n_c = j.at("class_counts").at(c).get<std::uint64_t>();
      std::vector<BowVector> rows(n_c);
      for (const auto& entry : j.at("token_counts").at(c)) {
        const auto bucket = entry.at(0).get<std::uint32_t>();
        const auto count = entry.at(1).get<std::uint64_t>();
        if (bucket >= kHashDimension || count > n_c) {
          throw Error("bad predictor checkpoint: inconsistent counts");
        }
        for (std::uint64_t k = 0; k < count; ++k) rows[k].buckets.push_back(bucket);
      }
      model.update(rows, c);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad predictor checkpoint: ") + e.what());
  }
}

void save_predictor(const NaiveBayesModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << predictor_to_json(model).dump() << '\n';
}

}  // namespace lossgate
