#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "rdfs/attack/box_lbfgs.hpp"
#include "rdfs/attack/target.hpp"
#include "rdfs/det/detector.hpp"

namespace rdfs::attack {

/// Iterative signed-gradient attack; each step is scaled by the current
/// image's dynamic range.
struct IfgsmConfig {
  std::size_t steps = 10;
  /// Ascending strengths to try.
  std::vector<double> epsilons;

  /// S = 10, E = {0.001, 0.002, ..., 0.1}.
  static IfgsmConfig standard();
  void validate() const;
};

/// Signed steps of size epsilon clipped to an alpha ball (both relative to
/// the dynamic range) around the original.
struct PgdConfig {
  double epsilon = 0.05;
  double alpha = 0.3;
  bool binary_search = true;
  std::size_t search_rounds = 10;
  std::size_t steps = 40;
  void validate() const;
};

/// min c*|z - x|^2 + CE(z, H0) over the unit box, searched over c.
struct LbfgsConfig {
  /// Ascending trade-off constants for the geometric sweep.
  std::vector<double> c_grid{1e-3, 1e-2, 1e-1, 1, 10, 100};
  /// When every grid value succeeds the boundary is not bracketed; the sweep
  /// continues past the grid at its last ratio for up to this many values.
  std::size_t extend_steps = 12;
  std::size_t bisection_steps = 5;
  std::size_t max_iterations = 200;
  std::size_t memory = 10;
  void validate() const;
};

using AttackConfig = std::variant<IfgsmConfig, PgdConfig, LbfgsConfig>;

enum class AttackKind { pgd, fgsm, bfgs };
/// Report names: "pgd", "fgsm", "bfgs".
std::string_view attack_name(AttackKind kind);
AttackKind parse_attack(std::string_view name);
AttackKind kind_of(const AttackConfig& cfg);

struct AttackOutcome {
  /// Adversarial sample in model units, within [0,1].
  std::vector<float> adversarial;
  bool success = false;
  /// Against the unattacked sample on the [0,255] scale.
  double psnr_db = 0;
  /// Chosen epsilon, alpha or c.
  double hyperparameter = 0;
  /// Gradient evaluations (optimizer evaluations for L-BFGS).
  std::size_t iterations = 0;
};

/// Throws std::invalid_argument if the target already decides H0 on x.
AttackOutcome ifgsm(const AttackTarget& target, std::span<const float> x, const IfgsmConfig& cfg);
AttackOutcome pgd(const AttackTarget& target, std::span<const float> x, const PgdConfig& cfg);
AttackOutcome lbfgs_attack(const AttackTarget& target, std::span<const float> x, const LbfgsConfig& cfg);
AttackOutcome run_attack(const AttackTarget& target, std::span<const float> x, const AttackConfig& cfg);

/// One I-FGSM strength: up to S steps with early exit. Exposed for audits.
AttackOutcome ifgsm_single(const AttackTarget& target, std::span<const float> x, double epsilon, std::size_t steps);
/// One PGD run at a fixed bound and step.
AttackOutcome pgd_single(const AttackTarget& target, std::span<const float> x, double epsilon, double alpha,
                         std::size_t steps);
/// One L-BFGS minimization at a fixed c.
AttackOutcome lbfgs_single(const AttackTarget& target, std::span<const float> x, double c, const LbfgsConfig& cfg);
/// The L-BFGS attack objective c*|z - x|^2 + CE(z, H0) and its gradient.
double lbfgs_objective(const AttackTarget& target, std::span<const float> x, double c, std::span<const double> z,
                       std::span<double> grad);

struct AttackSummary {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  /// Successes that still decide H0 after rounding to 8-bit pixels.
  std::size_t succeeded_quantized = 0;
  double success_rate = 0;
  double quantized_success_rate = 0;
  /// Over successes; 0 when there are none.
  double mean_psnr = 0;
  double min_psnr = 0;
};

struct AttackBatch {
  std::vector<AttackOutcome> outcomes;
  AttackSummary summary;
};

/// Runs the attack on every sample ([count, input_size] model units) with a
/// pool of `threads` workers; outcomes are in input order. Rejects samples
/// not decided H1.
AttackBatch evaluate_attack_batch(const det::CnnDetector& detector, std::span<const float> samples, std::size_t count,
                                  const AttackConfig& cfg, std::size_t threads = 1);

AttackSummary summarize(const AttackTarget& target, const std::vector<AttackOutcome>& outcomes);

/// Pixels rounded to 8-bit levels, back in model units.
std::vector<float> quantize_model_units(std::span<const float> x);

}  // namespace rdfs::attack
