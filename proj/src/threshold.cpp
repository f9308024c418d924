#include "lossgate/threshold.hpp"

#include <cmath>

#include "lossgate/error.hpp"

namespace lossgate {

RingWindow::RingWindow(std::size_t capacity) : buf_(capacity, 0.0) {
  if (capacity == 0) throw UsageError("window size must be positive");
}

void RingWindow::push(double value) {
  buf_[head_] = value;
  head_ = (head_ + 1) % buf_.size();
  if (count_ < buf_.size()) ++count_;
}

std::vector<double> RingWindow::values() const {
  std::vector<double> out;
  out.reserve(count_);
  const std::size_t start = (head_ + buf_.size() - count_) % buf_.size();
  for (std::size_t i = 0; i < count_; ++i) {
    out.push_back(buf_[(start + i) % buf_.size()]);
  }
  return out;
}

double RingWindow::mean() const {
  if (count_ == 0) throw Error("mean of an empty window");
  const std::size_t start = (head_ + buf_.size() - count_) % buf_.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < count_; ++i) sum += buf_[(start + i) % buf_.size()];
  return sum / static_cast<double>(count_);
}

ThresholdState::ThresholdState(std::size_t window, double skip_margin)
    : window_(window), margin_(skip_margin) {
  if (!(skip_margin > 0.0) || !std::isfinite(skip_margin)) {
    throw UsageError("skip margin must be a positive finite number");
  }
}

void ThresholdState::observe_loss(double loss) {
  if (frozen_) throw Error("threshold frozen");
  if (!(loss >= 0.0) || !std::isfinite(loss)) {
    throw Error("batch loss must be a non-negative finite number");
  }
  window_.push(loss);
  if (window_.full()) low_ = window_.mean();
}

void ThresholdState::freeze() {
  if (frozen_) return;
  if (!window_.full()) throw Error("cannot freeze threshold with a partial window");
  frozen_ = true;
}

void ThresholdState::pin(double value) {
  low_ = value;
  frozen_ = true;
}

double ThresholdState::effective_threshold() const {
  if (!low_) throw Error("loss threshold not yet defined");
  return margin_ * *low_;
}

double ThresholdState::variance() const {
  const auto v = window_.values();
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

bool ThresholdState::is_stable(double variance_tolerance) const {
  return window_.full() && variance() <= variance_tolerance;
}

bool ThresholdState::should_skip_backward(double batch_loss) const {
  return batch_loss < effective_threshold();
}

}  // namespace lossgate
