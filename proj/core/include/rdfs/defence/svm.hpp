#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rdfs::defence {

enum class SvmKernel { linear, rbf };

std::string_view kernel_name(SvmKernel kernel);
SvmKernel parse_kernel(std::string_view name);

/// Candidate hyperparameters. gamma_values is ignored for the linear kernel.
struct SvmGrid {
  std::vector<double> c_values;
  std::vector<double> gamma_values;
};

/// C in {0.01, 0.1, 1, 10, 100}; for rbf, gamma in {1/(dim * mean_variance), 0.01, 0.1, 1}.
SvmGrid default_svm_grid(SvmKernel kernel, std::size_t dim, double mean_variance);

struct SvmConfig {
  SvmKernel kernel = SvmKernel::linear;
  std::size_t cv_folds = 5;
  /// Empty means default_svm_grid for the data at hand.
  std::optional<SvmGrid> grid;
  std::uint64_t seed = 0;
  /// Passes over the data for the primal subgradient solver.
  std::size_t linear_epochs = 30;
  double rbf_tolerance = 1e-3;
  std::size_t rbf_max_iterations = 200000;
};

/// Per-coordinate z-score from training statistics. Constant coordinates
/// are centred but not scaled.
struct Standardizer {
  std::vector<float> mean;
  std::vector<float> inv_std;

  static Standardizer fit(std::span<const float> rows, std::size_t count, std::size_t dim);
  std::vector<float> apply(std::span<const float> rows, std::size_t count) const;
  std::size_t dim() const { return mean.size(); }
};

struct SvmModel {
  SvmKernel kernel = SvmKernel::linear;
  std::size_t dim = 0;
  double c = 1;
  double gamma = 0;
  double bias = 0;
  /// Linear: primal weights [dim].
  std::vector<float> weights;
  /// Rbf: support vectors [count, dim] and their alpha_i * y_i.
  std::vector<float> support_vectors;
  std::vector<float> coefficients;

  /// Positive scores mean H1.
  double decision(std::span<const float> x) const;
};

/// Labels are class indices (0 = H0, 1 = H1); the solver uses -1 / +1.
SvmModel fit_svm(std::span<const float> rows, std::size_t count, std::size_t dim, std::span<const int> labels,
                 SvmKernel kernel, double c, double gamma, const SvmConfig& cfg);

struct SvmSelection {
  SvmModel model;
  /// Mean held-out accuracy per grid point, C-major then gamma.
  std::vector<double> cv_accuracy;
  double best_cv_accuracy = 0;
};

/// Cross-validates every grid point on stratified folds, keeps the first best
/// in grid order and refits on all rows.
SvmSelection train_svm_cv(std::span<const float> rows, std::size_t count, std::size_t dim,
                          std::span<const int> labels, const SvmConfig& cfg);

}  // namespace rdfs::defence
