#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include <nlohmann/json.hpp>

#include "../oracles.hpp"
#include "lossgate/error.hpp"
#include "lossgate/model.hpp"
#include "lossgate/rng.hpp"

using namespace lossgate;

namespace {

MiniBatch batch_of(const std::vector<Example>& data) {
  MiniBatch b;
  for (const auto& e : data) b.examples.push_back(&e);
  return b;
}

}  // namespace

TEST_CASE("zero model has loss ln 2") {
  TargetModel m;
  std::vector<Example> data{make_example("good movie", 1), make_example("bad", 0)};
  const auto fr = forward(m, batch_of(data));
  CHECK(fr.batch_loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(fr.per_example_probs[0] == 0.5);
  CHECK(predict(m, data[0].features) == 0);  // ties go to class 0
}

TEST_CASE("softplus and cross entropy are stable") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(cross_entropy(1000.0, 1) == doctest::Approx(0.0));
  CHECK(cross_entropy(-1000.0, 1) == doctest::Approx(1000.0));
  CHECK(sigmoid(-1000.0) >= 0.0);
}

TEST_CASE("gradient matches finite differences of an independent loss") {
  Rng rng(5);
  TargetModel m(0.3);
  std::vector<Example> data;
  for (int i = 0; i < 6; ++i) {
    std::string text;
    for (int t = 0; t < 4; ++t) text += "w" + std::to_string(rng.below(12)) + " ";
    data.push_back(make_example(text, static_cast<int>(rng.below(2))));
  }
  std::map<std::uint32_t, long double> w;
  for (const auto& e : data) {
    for (auto b : e.features.buckets) {
      const double v = rng.uniform() - 0.5;
      m.set_weight(b, v);
      w[b] = v;
    }
  }
  m.set_bias(0.25);
  std::vector<std::pair<std::vector<std::uint32_t>, int>> plain;
  for (const auto& e : data) plain.emplace_back(e.features.buckets, e.label);

  const MiniBatch batch = batch_of(data);
  const auto fr = forward(m, batch);
  CHECK(fr.batch_loss == doctest::Approx(static_cast<double>(oracle::batch_loss(w, 0.25L, plain))));
  const Gradient g = gradient(fr, batch);
  const long double h = 1e-4L;
  for (const auto& [b, gw] : g.weights) {
    auto up = w, down = w;
    up[b] += h;
    down[b] -= h;
    const long double fd =
        (oracle::batch_loss(up, 0.25L, plain) - oracle::batch_loss(down, 0.25L, plain)) / (2 * h);
    CHECK(std::abs(gw - static_cast<double>(fd)) <= 1e-5 * std::max(1.0, std::abs(gw)));
  }
  const long double fd_bias =
      (oracle::batch_loss(w, 0.25L + h, plain) - oracle::batch_loss(w, 0.25L - h, plain)) / (2 * h);
  CHECK(g.bias == doctest::Approx(static_cast<double>(fd_bias)).epsilon(1e-6));
}

TEST_CASE("backward applies one SGD step") {
  TargetModel m(0.5);
  std::vector<Example> data{make_example("good", 1)};
  const MiniBatch batch = batch_of(data);
  const auto fr = forward(m, batch);
  backward(m, fr, batch);
  const auto b = data[0].features.buckets[0];
  // residual (0.5 - 1) / 1, step -lr * residual
  CHECK(m.weight(b) == 0.25);
  CHECK(m.bias() == 0.25);
  CHECK(m.step_count() == 1);
}

TEST_CASE("stale forward result is rejected") {
  TargetModel m;
  std::vector<Example> data{make_example("good", 1)};
  const MiniBatch batch = batch_of(data);
  const auto fr = forward(m, batch);
  backward(m, fr, batch);
  CHECK_THROWS_WITH_AS(backward(m, fr, batch), doctest::Contains("stale"), Error);
}

TEST_CASE("evaluate counts argmax hits") {
  TargetModel m;
  std::vector<Example> data{make_example("good", 1), make_example("bad", 0)};
  m.set_weight(data[0].features.buckets[0], 2.0);
  CHECK(evaluate(m, data) == 1.0);
  m.set_bias(5.0);
  CHECK(evaluate(m, data) == 0.5);
}

TEST_CASE("checkpoint round trip is exact") {
  TargetModel m(0.125);
  m.set_weight(7, 0.1 + 0.2);
  m.set_weight(200000, -1e-300);
  m.set_bias(-0.5);
  m.set_step_count(42);
  const auto j = model_to_json(m);
  CHECK(j["weights"].size() == 2);
  const TargetModel back = model_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == m);
  CHECK(back.learning_rate() == 0.125);

  const auto path = std::filesystem::temp_directory_path() / "lossgate_model_test.json";
  save_model(m, path);
  CHECK(load_model(path) == m);
  std::filesystem::remove(path);

  auto bad = j;
  bad["weights"] = {{kHashDimension, 1.0}};
  CHECK_THROWS_AS(model_from_json(bad), Error);
}
