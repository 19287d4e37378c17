#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rdfs/ad/tensor.hpp"

namespace rdfs::ad {

/// Define-by-run record of executed operations. Each op appends its output
/// and a rule that pushes the output gradient into its inputs; backward()
/// replays the rules in reverse order.
template <typename Real>
class Tape {
 public:
  struct Options {
    bool recording = true;
    /// Reject non-finite values produced by any op.
    bool strict = false;
  };

  Tape() = default;
  explicit Tape(Options options) : options_(options) {}

  static Tape inference() { return Tape(Options{.recording = false, .strict = false}); }

  bool recording() const { return options_.recording; }
  bool strict() const { return options_.strict; }
  std::size_t size() const { return records_.size(); }

  /// True when an op over these inputs must produce a gradient-tracking output.
  template <typename... Ts>
  bool tracks(const Ts&... inputs) const {
    return options_.recording && (inputs.requires_grad() || ...);
  }

  void record(Tensor<Real> output, std::function<void()> rule) {
    records_.push_back(Record{std::move(output), std::move(rule)});
  }

  void check_finite(const Tensor<Real>& output, std::string_view op) const {
    if (!options_.strict) return;
    const auto values = output.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i])) {
        throw std::domain_error(std::string(op) + ": non-finite output at flat index " +
                                std::to_string(i));
      }
    }
  }

  /// Populates grad() on every gradient-tracking tensor reachable from loss.
  /// Intermediate gradients are reset first, so repeated calls on the same
  /// tape are reproducible once leaf gradients have been zeroed.
  void backward(Tensor<Real> loss) {
    if (loss.size() != 1) {
      throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                  shape_string(loss.shape()));
    }
    if (!loss.requires_grad()) return;
    for (auto& rec : records_) rec.output.zero_grad();
    loss.mutable_grad()[0] = Real(1);
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (!it->output.has_grad()) continue;
      it->rule();
    }
  }

  void clear() { records_.clear(); }

 private:
  struct Record {
    Tensor<Real> output;
    std::function<void()> rule;
  };

  Options options_{};
  std::vector<Record> records_;
};

}  // namespace rdfs::ad
