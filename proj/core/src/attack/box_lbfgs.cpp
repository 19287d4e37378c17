#include "rdfs/attack/box_lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace rdfs::attack {

namespace {

struct Pair {
  std::vector<double> s, y;
  double rho;
};

}  // namespace

BoxLbfgsResult minimize_box(const Objective& fn, std::vector<double> x, std::span<const double> lower,
                            std::span<const double> upper, const BoxLbfgsOptions& options) {
  const std::size_t n = x.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("minimize_box: bound size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > upper[i]) throw std::invalid_argument("minimize_box: lower bound above upper bound");
    x[i] = std::clamp(x[i], lower[i], upper[i]);
  }
  auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
  };

  BoxLbfgsResult r;
  std::vector<double> g(n), gn(n), d(n), xn(n), q(n);
  std::vector<bool> free(n);
  double f = fn(x, g);
  r.evaluations = 1;
  std::deque<Pair> memory;

  while (r.iterations < options.max_iterations) {
    double pg_norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pinned = (x[i] <= lower[i] && g[i] > 0) || (x[i] >= upper[i] && g[i] < 0);
      free[i] = !pinned;
      if (!pinned) pg_norm = std::max(pg_norm, std::abs(g[i]));
    }
    if (pg_norm < options.pg_tolerance) {
      r.converged = true;
      break;
    }

    bool accepted = false;
    double fnew = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) memory.clear();
      // Two-loop recursion over the free coordinates.
      for (std::size_t i = 0; i < n; ++i) q[i] = free[i] ? g[i] : 0.0;
      std::vector<double> alphas(memory.size());
      for (std::size_t m = memory.size(); m-- > 0;) {
        double a = 0;
        for (std::size_t i = 0; i < n; ++i) a += free[i] ? memory[m].s[i] * q[i] : 0.0;
        a *= memory[m].rho;
        alphas[m] = a;
        for (std::size_t i = 0; i < n; ++i) {
          if (free[i]) q[i] -= a * memory[m].y[i];
        }
      }
      double scale = 1.0;
      if (!memory.empty()) {
        const auto& last = memory.back();
        double sy = 0, yy = 0;
        for (std::size_t i = 0; i < n; ++i) {
          sy += last.s[i] * last.y[i];
          yy += last.y[i] * last.y[i];
        }
        if (yy > 0) scale = sy / yy;
      }
      for (std::size_t i = 0; i < n; ++i) q[i] *= scale;
      for (std::size_t m = 0; m < memory.size(); ++m) {
        double b = 0;
        for (std::size_t i = 0; i < n; ++i) b += free[i] ? memory[m].y[i] * q[i] : 0.0;
        b *= memory[m].rho;
        for (std::size_t i = 0; i < n; ++i) {
          if (free[i]) q[i] += memory[m].s[i] * (alphas[m] - b);
        }
      }
      double slope = 0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = free[i] ? -q[i] : 0.0;
        slope += g[i] * d[i];
      }
      if (!(slope < 0)) {
        memory.clear();
        for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -g[i] : 0.0;
      }
      double t = memory.empty() ? std::min(1.0, 1.0 / pg_norm) : 1.0;
      for (std::size_t b = 0; b < options.max_backtracks; ++b, t *= 0.5) {
        for (std::size_t i = 0; i < n; ++i) xn[i] = x[i] + t * d[i];
        project(xn);
        double decrease = 0;
        for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (xn[i] - x[i]);
        if (!(decrease < 0)) break;
        fnew = fn(xn, gn);
        ++r.evaluations;
        if (fnew <= f + options.armijo * decrease) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      r.converged = true;
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0};
    double sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = xn[i] - x[i];
      p.y[i] = gn[i] - g[i];
      sy += p.s[i] * p.y[i];
    }
    if (sy > 1e-12) {
      p.rho = 1.0 / sy;
      memory.push_back(std::move(p));
      if (memory.size() > options.memory) memory.pop_front();
    }
    const double drop = f - fnew;
    x.swap(xn);
    g.swap(gn);
    f = fnew;
    ++r.iterations;
    if (drop < options.relative_tolerance * std::max({std::abs(f), std::abs(f + drop), 1.0})) {
      r.converged = true;
      break;
    }
  }
  r.x = std::move(x);
  r.f = f;
  return r;
}

}  // namespace rdfs::attack
