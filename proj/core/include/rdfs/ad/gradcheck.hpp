#pragma once

#include <functional>

#include "rdfs/ad/tape.hpp"
#include "rdfs/ad/tensor.hpp"

namespace rdfs::ad {

/// A scalar-valued function of one tensor, built on the supplied tape.
template <typename Real>
using ScalarFn = std::function<Tensor<Real>(Tape<Real>&, const Tensor<Real>&)>;

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t worst_index = 0;
  double analytic = 0;
  double numeric = 0;
};

/// Compares backward() against central differences (f(x+h)-f(x-h))/2h at
/// every coordinate of point. Relative error uses max(|a|,|n|,1e-8) as
/// denominator.
template <typename Real>
GradCheckResult finite_diff_check(const ScalarFn<Real>& fn, const Tensor<Real>& point, Real h);

}  // namespace rdfs::ad
