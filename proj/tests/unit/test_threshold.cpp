#include <doctest.h>

#include <cmath>
#include <limits>

#include "../oracles.hpp"
#include "lossgate/error.hpp"
#include "lossgate/rng.hpp"
#include "lossgate/threshold.hpp"

using namespace lossgate;

TEST_CASE("K=4 stream") {
  ThresholdState t(4);
  for (double v : {0.9, 0.5, 0.4, 0.3, 0.2}) t.observe_loss(v);
  CHECK(t.window_values() == std::vector<double>{0.5, 0.4, 0.3, 0.2});
  t.freeze();
  REQUIRE(t.low());
  CHECK(*t.low() == doctest::Approx(0.35).epsilon(1e-15));
  CHECK(t.should_skip_backward(0.34));
  CHECK_FALSE(t.should_skip_backward(*t.low()));
  CHECK_FALSE(t.should_skip_backward(0.36));
}

TEST_CASE("ring window mean matches the explicit slice") {
  Rng rng(11);
  for (std::size_t k : {1u, 3u, 8u}) {
    RingWindow w(k);
    std::vector<double> stream;
    for (std::size_t i = 0; i < 200; ++i) {
      stream.push_back(rng.uniform() * 3.0);
      w.push(stream.back());
      if (w.full()) CHECK(std::abs(w.mean() - oracle::window_mean(stream, i, k)) <= 1e-12);
    }
  }
}

TEST_CASE("freeze rules") {
  ThresholdState t(3);
  t.observe_loss(1.0);
  CHECK_THROWS_AS(t.freeze(), Error);
  CHECK_THROWS_AS(t.effective_threshold(), Error);
  t.observe_loss(1.0);
  t.observe_loss(1.0);
  t.freeze();
  t.freeze();  // idempotent
  CHECK(t.frozen());
  CHECK_THROWS_WITH_AS(t.observe_loss(0.5), doctest::Contains("frozen"), Error);
}

TEST_CASE("invalid losses are rejected") {
  ThresholdState t(2);
  CHECK_THROWS_AS(t.observe_loss(-0.1), Error);
  CHECK_THROWS_AS(t.observe_loss(std::numeric_limits<double>::quiet_NaN()), Error);
  CHECK_THROWS_AS(t.observe_loss(std::numeric_limits<double>::infinity()), Error);
  CHECK(t.window_values().empty());
}

TEST_CASE("margin scales the threshold") {
  ThresholdState t(2, 0.5);
  t.observe_loss(1.0);
  t.observe_loss(1.0);
  t.freeze();
  CHECK(t.effective_threshold() == 0.5);
  CHECK(t.should_skip_backward(0.49));
  CHECK_FALSE(t.should_skip_backward(0.6));
}

TEST_CASE("pin fixes the threshold without a window") {
  ThresholdState t(64);
  t.pin(0.3);
  CHECK(t.frozen());
  CHECK(t.effective_threshold() == 0.3);
  CHECK(t.should_skip_backward(0.2999));
  CHECK_FALSE(t.should_skip_backward(0.3));
}

TEST_CASE("variance and stability") {
  ThresholdState t(4);
  t.observe_loss(1.0);
  CHECK(t.variance() == 0.0);
  for (double v : {2.0, 3.0, 4.0}) t.observe_loss(v);
  CHECK(t.variance() == doctest::Approx(5.0 / 3.0));
  CHECK_FALSE(t.is_stable(1e-4));
  ThresholdState flat(3);
  for (int i = 0; i < 3; ++i) flat.observe_loss(0.7);
  CHECK(flat.is_stable(1e-4));
}
