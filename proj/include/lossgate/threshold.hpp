#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace lossgate {

// Fixed-capacity FIFO of the most recent values. `values()` returns them
// oldest first.
class RingWindow {
 public:
  explicit RingWindow(std::size_t capacity);

  void push(double value);
  std::size_t capacity() const { return buf_.size(); }
  std::size_t size() const { return count_; }
  bool full() const { return count_ == buf_.size(); }
  std::vector<double> values() const;
  // Summed oldest to newest, so the result equals a plain loop over values().
  double mean() const;

 private:
  std::vector<double> buf_;
  std::size_t head_ = 0;  // next write slot
  std::size_t count_ = 0;
};

// Automatic loss threshold: the mean of the last K batch losses. Once frozen
// the threshold is fixed for the rest of the run.
class ThresholdState {
 public:
  explicit ThresholdState(std::size_t window, double skip_margin = 1.0);

  void observe_loss(double loss);
  void freeze();
  // Freezes at an externally chosen value regardless of the window. Used by
  // the fixed-threshold baseline and equivalence tests.
  void pin(double value);

  std::size_t window_size() const { return window_.capacity(); }
  bool window_full() const { return window_.full(); }
  bool frozen() const { return frozen_; }
  std::vector<double> window_values() const { return window_.values(); }

  // L_low; empty until the window has been full once.
  std::optional<double> low() const { return low_; }
  double skip_margin() const { return margin_; }
  // margin * L_low, the value batch losses are compared against.
  double effective_threshold() const;

  // Sample variance (n - 1) of the window contents; 0 for a single value.
  double variance() const;
  bool is_stable(double variance_tolerance) const;

  // True iff batch_loss < margin * L_low.
  bool should_skip_backward(double batch_loss) const;

 private:
  RingWindow window_;
  std::optional<double> low_;
  double margin_;
  bool frozen_ = false;
};

}  // namespace lossgate
