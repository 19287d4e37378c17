#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rdfs::attack {

/// Objective returning f(x) and writing its gradient.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BoxLbfgsOptions {
  std::size_t memory = 10;
  std::size_t max_iterations = 200;
  /// Stop when the projected gradient's max-norm falls below this.
  double pg_tolerance = 1e-5;
  /// Stop when an iteration lowers f by less than this fraction of max(|f|, 1).
  double relative_tolerance = 1e-7;
  double armijo = 1e-4;
  std::size_t max_backtracks = 30;
};

struct BoxLbfgsResult {
  std::vector<double> x;
  double f = 0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Gradient-projection L-BFGS for box-constrained minimization: limited-memory
/// directions restricted to the free variables, projection onto the box and
/// Armijo backtracking along the projected path.
BoxLbfgsResult minimize_box(const Objective& fn, std::vector<double> x0, std::span<const double> lower,
                            std::span<const double> upper, const BoxLbfgsOptions& options = {});

}  // namespace rdfs::attack
