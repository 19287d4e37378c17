#include "rdfs/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdfs::ad {

template <typename Real>
GradCheckResult finite_diff_check(const ScalarFn<Real>& fn, const Tensor<Real>& point, Real h) {
  if (!(h > Real(0))) throw std::invalid_argument("finite_diff_check: step must be positive");
  Tensor<Real> x = point.detach();
  x.set_requires_grad(true);
  Tape<Real> tape;
  tape.backward(fn(tape, x));
  std::vector<Real> analytic = x.has_grad() ? std::vector<Real>(x.grad().begin(), x.grad().end())
                                            : std::vector<Real>(x.size(), Real(0));

  auto evaluate = [&](const Tensor<Real>& at) {
    Tape<Real> plain = Tape<Real>::inference();
    return static_cast<double>(fn(plain, at).item());
  };

  GradCheckResult result;
  Tensor<Real> probe = point.detach();
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const Real saved = probe.data()[i];
    probe.data()[i] = saved + h;
    const double up = evaluate(probe);
    probe.data()[i] = saved - h;
    const double down = evaluate(probe);
    probe.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * static_cast<double>(h));
    const double a = static_cast<double>(analytic[i]);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > result.max_relative_error || i == 0) {
      if (rel >= result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_index = i;
        result.analytic = a;
        result.numeric = numeric;
      }
    }
  }
  return result;
}

template GradCheckResult finite_diff_check(const ScalarFn<float>&, const Tensor<float>&, float);
template GradCheckResult finite_diff_check(const ScalarFn<double>&, const Tensor<double>&, double);

}  // namespace rdfs::ad
