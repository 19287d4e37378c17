#pragma once

#include <array>
#include <span>
#include <vector>

#include "rdfs/det/detector.hpp"
#include "rdfs/img/patches.hpp"

namespace rdfs::attack {

/// Two-class differentiable model seen by the attacks, in model units.
class AttackTarget {
 public:
  virtual ~AttackTarget() = default;

  virtual std::size_t input_size() const = 0;

  /// Logits of one sample via the plain inference path.
  virtual std::array<float, 2> logits(std::span<const float> x) const = 0;

  /// Cross-entropy of x against `label`; fills d(loss)/dx and, when
  /// non-empty, the two logits of the same forward pass.
  virtual double loss_and_gradient(std::span<const float> x, img::Label label, std::span<float> grad,
                                   std::span<float> logits_out) const = 0;

  img::Label decide(std::span<const float> x) const;
};

/// Adapter over a trained CNN detector.
class CnnTarget final : public AttackTarget {
 public:
  explicit CnnTarget(const det::CnnDetector& detector) : det_(detector) {}

  std::size_t input_size() const override { return det_.input_size(); }
  std::array<float, 2> logits(std::span<const float> x) const override;
  double loss_and_gradient(std::span<const float> x, img::Label label, std::span<float> grad,
                           std::span<float> logits_out) const override;

 private:
  const det::CnnDetector& det_;
};

/// Logistic-regression model: logits (0, w.x + b). Its decision boundary
/// is the hyperplane w.x + b = 0.
class LinearTarget final : public AttackTarget {
 public:
  LinearTarget(std::vector<double> weights, double bias) : w_(std::move(weights)), b_(bias) {}

  std::size_t input_size() const override { return w_.size(); }
  std::array<float, 2> logits(std::span<const float> x) const override;
  double loss_and_gradient(std::span<const float> x, img::Label label, std::span<float> grad,
                           std::span<float> logits_out) const override;

  /// Signed distance from x to the boundary (positive on the H1 side).
  double signed_distance(std::span<const float> x) const;

 private:
  double margin(std::span<const float> x) const;

  std::vector<double> w_;
  double b_;
};

}  // namespace rdfs::attack
