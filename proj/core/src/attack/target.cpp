#include "rdfs/attack/target.hpp"

#include <cmath>
#include <stdexcept>

namespace rdfs::attack {

img::Label AttackTarget::decide(std::span<const float> x) const {
  const auto l = logits(x);
  return det::decide(l);
}

std::array<float, 2> CnnTarget::logits(std::span<const float> x) const {
  const auto l = det_.logits(x, 1);
  return {l[0], l[1]};
}

double CnnTarget::loss_and_gradient(std::span<const float> x, img::Label label, std::span<float> grad,
                                    std::span<float> logits_out) const {
  return det_.loss_and_gradient(x, label, grad, logits_out);
}

double LinearTarget::margin(std::span<const float> x) const {
  if (x.size() != w_.size()) throw std::invalid_argument("LinearTarget: input size mismatch");
  double m = b_;
  for (std::size_t i = 0; i < w_.size(); ++i) m += w_[i] * x[i];
  return m;
}

std::array<float, 2> LinearTarget::logits(std::span<const float> x) const {
  return {0.0f, static_cast<float>(margin(x))};
}

double LinearTarget::loss_and_gradient(std::span<const float> x, img::Label label, std::span<float> grad,
                                       std::span<float> logits_out) const {
  const double m = margin(x);
  // Loss for H1 is softplus(-m), for H0 softplus(m).
  const double s = label == img::Label::manipulated ? -m : m;
  const double loss = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
  const double sigma = 1.0 / (1.0 + std::exp(-s));
  const double dm = label == img::Label::manipulated ? -sigma : sigma;
  for (std::size_t i = 0; i < w_.size(); ++i) grad[i] = static_cast<float>(dm * w_[i]);
  if (logits_out.size() == 2) {
    logits_out[0] = 0.0f;
    logits_out[1] = static_cast<float>(m);
  }
  return loss;
}

double LinearTarget::signed_distance(std::span<const float> x) const {
  double norm = 0;
  for (double v : w_) norm += v * v;
  return margin(x) / std::sqrt(norm);
}

}  // namespace rdfs::attack
