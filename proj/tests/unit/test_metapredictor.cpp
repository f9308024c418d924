#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "../oracles.hpp"
#include "lossgate/error.hpp"
#include "lossgate/metapredictor.hpp"
#include "lossgate/rng.hpp"

using namespace lossgate;

namespace {

BowVector bow(std::vector<std::uint32_t> b) { return BowVector{std::move(b)}; }

}  // namespace

TEST_CASE("labels are the complement of the skip rule") {
  CHECK(make_label(0.5, 0.4) == 1);
  CHECK(make_label(0.4, 0.4) == 1);
  CHECK(make_label(0.39, 0.4) == 0);
  ThresholdState t(1);
  t.observe_loss(0.4);
  t.freeze();
  for (double loss : {0.1, 0.39999, 0.4, 0.7}) {
    CHECK((make_label(loss, 0.4) == 0) == t.should_skip_backward(loss));
  }
}

TEST_CASE("hand-computed posterior") {
  NaiveBayesModel m(1.0);
  const std::vector<BowVector> pos{bow({1}), bow({1, 2})};
  const std::vector<BowVector> neg{bow({2})};
  m.update(pos, 1);
  m.update(neg, 0);
  // prior1 = 3/5, prior0 = 2/5
  // theta1: b1 = 3/4, b2 = 2/4; theta0: b1 = 1/3, b2 = 2/3
  // x = {1}: p1 ~ 3/5 * 3/4 * 1/2, p0 ~ 2/5 * 1/3 * 1/3
  const double j1 = 0.6 * 0.75 * 0.5, j0 = 0.4 / 9.0;
  CHECK(m.posterior(bow({1})) == doctest::Approx(j1 / (j1 + j0)).epsilon(1e-14));
  // unseen bucket changes nothing
  CHECK(m.posterior(bow({1, 99})) == doctest::Approx(m.posterior(bow({1}))).epsilon(1e-15));
}

TEST_CASE("posterior matches the brute-force oracle") {
  Rng rng(3);
  for (int inst = 0; inst < 50; ++inst) {
    const double alpha = 0.5 + rng.uniform();
    NaiveBayesModel m(alpha);
    std::vector<oracle::NbExample> data;
    const std::size_t n = 1 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) {
      oracle::NbExample ex;
      ex.label = static_cast<int>(rng.below(2));
      for (std::uint32_t b = 0; b < 4; ++b) {
        if (rng.bernoulli(0.5)) ex.present.insert(b);
      }
      data.push_back(ex);
      const BowVector v = bow({ex.present.begin(), ex.present.end()});
      m.update(std::span(&v, 1), ex.label);
    }
    for (int q = 0; q < 4; ++q) {
      std::set<std::uint32_t> x;
      for (std::uint32_t b = 0; b < 5; ++b) {
        if (rng.bernoulli(0.5)) x.insert(b);
      }
      const double want = oracle::nb_posterior(data, alpha, x);
      CHECK(std::abs(m.posterior(bow({x.begin(), x.end()})) - want) <= 1e-10);
    }
  }
}

TEST_CASE("empty and one-class models") {
  NaiveBayesModel m;
  CHECK(m.empty());
  CHECK_THROWS_WITH_AS(m.posterior(bow({1})), doctest::Contains("untrained"), Error);
  const std::vector<BowVector> batch{bow({1}), bow({2})};
  const auto cold = nb_predict_batch(m, batch);
  CHECK(cold.decision == 1);
  CHECK_FALSE(cold.mean_p1);

  m.update(batch, 0);
  CHECK_FALSE(m.has_both_classes());
  const auto one = nb_predict_batch(m, batch);
  CHECK(one.decision == 1);
  CHECK(one.fail_open);
  REQUIRE(one.mean_p1);
  CHECK(*one.mean_p1 < 0.5);
  CHECK_THROWS_AS(m.update(batch, 2), Error);
}

TEST_CASE("batch policies") {
  NaiveBayesModel m;
  const std::vector<BowVector> one{bow({1})}, zero{bow({2})};
  for (int i = 0; i < 5; ++i) {
    m.update(one, 1);
    m.update(zero, 0);
  }
  // Two confident zeros and one strong one.
  const std::vector<BowVector> mixed{bow({2}), bow({2}), bow({1})};
  const auto mean = nb_predict_batch(m, mixed, BatchPolicy::kMeanPosterior);
  const auto vote = nb_predict_batch(m, mixed, BatchPolicy::kMajorityVote);
  CHECK(mean.decision == 0);
  CHECK(vote.decision == 0);
  const std::vector<BowVector> tie{bow({2}), bow({1})};
  CHECK(nb_predict_batch(m, tie, BatchPolicy::kMajorityVote).decision == 1);
  CHECK(parse_batch_policy("majority") == BatchPolicy::kMajorityVote);
  CHECK(to_string(BatchPolicy::kMeanPosterior) == "mean");
  CHECK_THROWS_AS(parse_batch_policy("max"), UsageError);
}

TEST_CASE("predictor loss is the mean negative log posterior") {
  NaiveBayesModel m;
  const std::vector<BowVector> a{bow({1})}, b{bow({2})};
  m.update(a, 1);
  m.update(b, 0);
  const std::vector<BowVector> batch{bow({1}), bow({2})};
  const std::vector<int> labels{1, 1};
  const double want = -(std::log(m.posterior(batch[0])) + std::log(m.posterior(batch[1]))) / 2;
  CHECK(predictor_loss(m, batch, labels) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("loss window reports only when full") {
  PredictorLossWindow w(3);
  w.push(1.0);
  w.push(2.0);
  CHECK_FALSE(w.mean());
  w.push(3.0);
  CHECK(*w.mean() == 2.0);
  w.push(6.0);
  CHECK(*w.mean() == doctest::Approx(11.0 / 3.0));
}

TEST_CASE("predictor checkpoint round trip") {
  NaiveBayesModel m(0.7);
  const std::vector<BowVector> a{bow({1, 5}), bow({5})}, b{bow({2})};
  m.update(a, 1);
  m.update(b, 0);
  const auto j = predictor_to_json(m);
  const NaiveBayesModel back = predictor_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == m);
  CHECK(back.posterior(bow({5})) == m.posterior(bow({5})));
  CHECK(back.vocabulary_size() == 3);
}
