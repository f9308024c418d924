#include "lossgate/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "lossgate/error.hpp"

namespace lossgate {

namespace {
constexpr const char* kModelFormat = "lossgate-model-v1";
}

TargetModel::TargetModel(double learning_rate)
    : weights_(kHashDimension, 0.0), learning_rate_(learning_rate) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("learning_rate must be positive");
  }
}

void TargetModel::set_weight(std::uint32_t bucket, double value) {
  weights_.at(bucket) = value;
  ++version_;
}

void TargetModel::set_bias(double value) {
  bias_ = value;
  ++version_;
}

double TargetModel::logit(const BowVector& x) const {
  double z = bias_;
  for (auto b : x.buckets) z += weights_[b];
  return z;
}

void TargetModel::apply_step(
    std::span<const std::pair<std::uint32_t, double>> weight_delta,
    double bias_delta) {
  for (const auto& [bucket, delta] : weight_delta) weights_.at(bucket) += delta;
  bias_ += bias_delta;
  ++step_count_;
  ++version_;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double cross_entropy(double logit, int label) {
  return label == 1 ? softplus(-logit) : softplus(logit);
}

ForwardResult forward(const TargetModel& model, const MiniBatch& batch) {
  if (batch.empty()) throw Error("forward on an empty batch");
  ForwardResult r;
  r.per_example_losses.reserve(batch.size());
  r.per_example_probs.reserve(batch.size());
  double sum = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Example& ex = batch[n];
    const double z = model.logit(ex.features);
    if (!std::isfinite(z)) throw Error("model diverged");
    const double loss = cross_entropy(z, ex.label);
    r.per_example_losses.push_back(loss);
    r.per_example_probs.push_back(sigmoid(z));
    sum += loss;
  }
  r.batch_loss = sum / static_cast<double>(batch.size());
  r.model_version = model.version();
  r.batch_index = batch.index;
  r.batch_size = batch.size();
  return r;
}

Gradient gradient(const ForwardResult& result, const MiniBatch& batch) {
  if (result.batch_size != batch.size() || result.batch_index != batch.index) {
    throw Error("forward result does not belong to this batch");
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::unordered_map<std::uint32_t, double> acc;
  Gradient g;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const Example& ex = batch[n];
    // d CE / d logit = p1 - y
    const double residual =
        (result.per_example_probs[n] - static_cast<double>(ex.label)) * inv_n;
    for (auto b : ex.features.buckets) acc[b] += residual;
    g.bias += residual;
  }
  g.weights.assign(acc.begin(), acc.end());
  std::sort(g.weights.begin(), g.weights.end());
  return g;
}

void backward(TargetModel& model, const ForwardResult& result,
              const MiniBatch& batch) {
  if (result.model_version != model.version()) {
    throw Error("stale forward result: model changed since forward pass");
  }
  Gradient g = gradient(result, batch);
  const double lr = model.learning_rate();
  for (auto& [bucket, value] : g.weights) {
    value *= -lr;
    if (!std::isfinite(value)) throw Error("model diverged");
  }
  model.apply_step(g.weights, -lr * g.bias);
}

int predict(const TargetModel& model, const BowVector& x) {
  return model.logit(x) > 0.0 ? 1 : 0;
}

double evaluate(const TargetModel& model, std::span<const Example> examples) {
  if (examples.empty()) throw Error("evaluate on an empty example set");
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    if (predict(model, ex.features) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

nlohmann::json model_to_json(const TargetModel& model) {
  nlohmann::json weights = nlohmann::json::array();
  const auto w = model.weights();
  for (std::uint32_t b = 0; b < w.size(); ++b) {
    if (w[b] != 0.0) weights.push_back({b, w[b]});
  }
  return {{"format", kModelFormat},
          {"dimension", kHashDimension},
          {"bias", model.bias()},
          {"step_count", model.step_count()},
          {"learning_rate", model.learning_rate()},
          {"weights", std::move(weights)}};
}

TargetModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat ||
        j.at("dimension").get<std::uint32_t>() != kHashDimension) {
      throw Error("unsupported model checkpoint format");
    }
    TargetModel model(j.at("learning_rate").get<double>());
    for (const auto& entry : j.at("weights")) {
      model.set_weight(entry.at(0).get<std::uint32_t>(), entry.at(1).get<double>());
    }
    model.set_bias(j.at("bias").get<double>());
    model.set_step_count(j.at("step_count").get<std::uint64_t>());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad model checkpoint: ") + e.what());
  } catch (const std::out_of_range&) {
    throw Error("bad model checkpoint: bucket out of range");
  }
}

void save_model(const TargetModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << model_to_json(model).dump() << '\n';
}

TargetModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return model_from_json(nlohmann::json::parse(in));
}

}  // namespace lossgate
