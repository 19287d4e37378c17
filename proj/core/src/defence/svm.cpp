#include "rdfs/defence/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rdfs/common/rng.hpp"

namespace rdfs::defence {

std::string_view kernel_name(SvmKernel kernel) { return kernel == SvmKernel::linear ? "linear" : "rbf"; }

SvmKernel parse_kernel(std::string_view name) {
  if (name == "linear") return SvmKernel::linear;
  if (name == "rbf") return SvmKernel::rbf;
  throw std::invalid_argument("unknown SVM kernel '" + std::string(name) + "' (expected linear or rbf)");
}

SvmGrid default_svm_grid(SvmKernel kernel, std::size_t dim, double mean_variance) {
  SvmGrid g;
  g.c_values = {0.01, 0.1, 1, 10, 100};
  if (kernel == SvmKernel::rbf) {
    const double v = mean_variance > 0 ? mean_variance : 1.0;
    g.gamma_values = {1.0 / (static_cast<double>(dim) * v), 0.01, 0.1, 1};
  }
  return g;
}

Standardizer Standardizer::fit(std::span<const float> rows, std::size_t count, std::size_t dim) {
  if (count == 0 || rows.size() != count * dim) throw std::invalid_argument("Standardizer: bad input size");
  Standardizer s;
  s.mean.resize(dim);
  s.inv_std.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    double sum = 0;
    for (std::size_t i = 0; i < count; ++i) sum += rows[i * dim + j];
    const double mu = sum / static_cast<double>(count);
    double ss = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = rows[i * dim + j] - mu;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    s.mean[j] = static_cast<float>(mu);
    s.inv_std[j] = sd > 1e-12 ? static_cast<float>(1.0 / sd) : 1.0f;
  }
  return s;
}

std::vector<float> Standardizer::apply(std::span<const float> rows, std::size_t count) const {
  const std::size_t d = dim();
  if (rows.size() != count * d) throw std::invalid_argument("Standardizer: bad input size");
  std::vector<float> out(rows.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = (rows[i * d + j] - mean[j]) * inv_std[j];
  }
  return out;
}

namespace {

double rbf(std::span<const float> a, std::span<const float> b, double gamma) {
  double d2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

std::span<const float> row(std::span<const float> rows, std::size_t dim, std::size_t i) {
  return rows.subspan(i * dim, dim);
}

void check_inputs(std::span<const float> rows, std::size_t count, std::size_t dim, std::span<const int> labels) {
  if (dim == 0) throw std::invalid_argument("svm: zero-dimensional features");
  if (rows.size() != count * dim || labels.size() != count)
    throw std::invalid_argument("svm: rows and labels disagree on sample count");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("svm: labels must be 0 or 1");
    (l == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw std::invalid_argument("svm: training data must contain both classes");
}

// Pegasos: primal hinge-loss subgradient steps with a constant 1 appended as
// the bias feature.
SvmModel fit_linear(std::span<const float> rows, std::size_t count, std::size_t dim, std::span<const int> labels,
                    double c, const SvmConfig& cfg) {
  const double lambda = 1.0 / (c * static_cast<double>(count));
  std::vector<double> w(dim + 1, 0.0);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(cfg.seed, "pegasos"));
  std::size_t t = 0;
  const std::size_t epochs = std::max<std::size_t>(cfg.linear_epochs, 1);
  for (std::size_t e = 0; e < epochs; ++e) {
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.bounded(i)]);
    for (std::size_t idx : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto x = row(rows, dim, idx);
      const double y = labels[idx] == 1 ? 1.0 : -1.0;
      double margin = w[dim];
      for (std::size_t j = 0; j < dim; ++j) margin += w[j] * x[j];
      margin *= y;
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < dim; ++j) w[j] += eta * y * x[j];
        w[dim] += eta * y;
      }
    }
  }
  SvmModel m;
  m.kernel = SvmKernel::linear;
  m.dim = dim;
  m.c = c;
  m.weights.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) m.weights[j] = static_cast<float>(w[j]);
  m.bias = w[dim];
  return m;
}

// Sequential minimal optimization with second-order working-set selection
// on the dual: min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0.
SvmModel fit_rbf(std::span<const float> rows, std::size_t count, std::size_t dim, std::span<const int> labels,
                 double c, double gamma, const SvmConfig& cfg) {
  const std::size_t n = count;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;

  constexpr std::size_t kMaxCached = 6000;
  const bool cached = n <= kMaxCached;
  std::vector<float> gram;
  if (cached) {
    gram.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      gram[i * n + i] = 1.0f;
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto v = static_cast<float>(rbf(row(rows, dim, i), row(rows, dim, j), gamma));
        gram[i * n + j] = v;
        gram[j * n + i] = v;
      }
    }
  }
  auto kernel_row = [&](std::size_t i, std::vector<double>& out) {
    for (std::size_t j = 0; j < n; ++j) {
      out[j] = cached ? gram[i * n + j] : (i == j ? 1.0 : rbf(row(rows, dim, i), row(rows, dim, j), gamma));
    }
  };

  std::vector<double> alpha(n, 0.0), grad(n, -1.0), ki(n), kj(n);
  constexpr double kTau = 1e-12;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < cfg.rbf_max_iterations; ++iter) {
    double gmax = -inf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? alpha[t] < c : alpha[t] > 0) {
        const double v = -y[t] * grad[t];
        if (v >= gmax) {
          gmax = v;
          i = t;
        }
      }
    }
    if (i == n) break;
    kernel_row(i, ki);
    double gmax2 = -inf, best = inf;
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!(y[t] > 0 ? alpha[t] > 0 : alpha[t] < c)) continue;
      const double v = y[t] * grad[t];
      gmax2 = std::max(gmax2, v);
      const double diff = gmax + v;
      if (diff > 0) {
        double quad = 2.0 - 2.0 * ki[t];
        if (quad <= 0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    if (gmax + gmax2 < cfg.rbf_tolerance || j == n) break;
    kernel_row(j, kj);
    double quad = 2.0 - 2.0 * ki[j];
    if (quad <= 0) quad = kTau;
    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
  }

  double ub = inf, lb = -inf, free_sum = 0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2;

  SvmModel m;
  m.kernel = SvmKernel::rbf;
  m.dim = dim;
  m.c = c;
  m.gamma = gamma;
  m.bias = -rho;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      const auto x = row(rows, dim, t);
      m.support_vectors.insert(m.support_vectors.end(), x.begin(), x.end());
      m.coefficients.push_back(static_cast<float>(alpha[t] * y[t]));
    }
  }
  return m;
}

}  // namespace

double SvmModel::decision(std::span<const float> x) const {
  if (x.size() != dim) {
    throw std::invalid_argument("svm: expected " + std::to_string(dim) + " features, got " + std::to_string(x.size()));
  }
  double s = bias;
  if (kernel == SvmKernel::linear) {
    for (std::size_t j = 0; j < dim; ++j) s += static_cast<double>(weights[j]) * x[j];
  } else {
    const std::span<const float> svs(support_vectors);
    for (std::size_t t = 0; t < coefficients.size(); ++t) s += coefficients[t] * rbf(row(svs, dim, t), x, gamma);
  }
  return s;
}

SvmModel fit_svm(std::span<const float> rows, std::size_t count, std::size_t dim, std::span<const int> labels,
                 SvmKernel kernel, double c, double gamma, const SvmConfig& cfg) {
  check_inputs(rows, count, dim, labels);
  if (!(c > 0)) throw std::invalid_argument("svm: C must be > 0");
  if (kernel == SvmKernel::rbf && !(gamma > 0)) throw std::invalid_argument("svm: gamma must be > 0");
  return kernel == SvmKernel::linear ? fit_linear(rows, count, dim, labels, c, cfg)
                                     : fit_rbf(rows, count, dim, labels, c, gamma, cfg);
}

SvmSelection train_svm_cv(std::span<const float> rows, std::size_t count, std::size_t dim,
                          std::span<const int> labels, const SvmConfig& cfg) {
  check_inputs(rows, count, dim, labels);
  if (cfg.cv_folds < 2) throw std::invalid_argument("svm: cv_folds must be >= 2");
  double var_sum = 0;
  for (std::size_t j = 0; j < dim; ++j) {
    double s = 0, ss = 0;
    for (std::size_t i = 0; i < count; ++i) {
      s += rows[i * dim + j];
      ss += static_cast<double>(rows[i * dim + j]) * rows[i * dim + j];
    }
    const double mu = s / static_cast<double>(count);
    var_sum += std::max(0.0, ss / static_cast<double>(count) - mu * mu);
  }
  const SvmGrid grid = cfg.grid ? *cfg.grid : default_svm_grid(cfg.kernel, dim, var_sum / static_cast<double>(dim));
  if (grid.c_values.empty() || (cfg.kernel == SvmKernel::rbf && grid.gamma_values.empty()))
    throw std::invalid_argument("svm: empty hyperparameter grid");
  const std::vector<double> gammas = cfg.kernel == SvmKernel::rbf ? grid.gamma_values : std::vector<double>{0.0};

  // Stratified fold assignment.
  std::vector<std::size_t> fold(count);
  SplitMix64 rng(derive_seed(cfg.seed, "svm-folds"));
  for (int cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < count; ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.size() < cfg.cv_folds) {
      throw std::invalid_argument("svm: class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                                  " samples, fewer than cv_folds=" + std::to_string(cfg.cv_folds));
    }
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.bounded(i)]);
    for (std::size_t r = 0; r < members.size(); ++r) fold[members[r]] = r % cfg.cv_folds;
  }

  SvmSelection sel;
  std::size_t best_index = 0;
  sel.best_cv_accuracy = -1;
  std::size_t index = 0;
  for (double c : grid.c_values) {
    for (double gamma : gammas) {
      std::size_t correct = 0;
      for (std::size_t f = 0; f < cfg.cv_folds; ++f) {
        std::vector<float> train_rows;
        std::vector<int> train_labels;
        for (std::size_t i = 0; i < count; ++i) {
          if (fold[i] == f) continue;
          const auto x = row(rows, dim, i);
          train_rows.insert(train_rows.end(), x.begin(), x.end());
          train_labels.push_back(labels[i]);
        }
        const auto model = fit_svm(train_rows, train_labels.size(), dim, train_labels, cfg.kernel, c, gamma, cfg);
        for (std::size_t i = 0; i < count; ++i) {
          if (fold[i] != f) continue;
          const int predicted = model.decision(row(rows, dim, i)) > 0 ? 1 : 0;
          correct += predicted == labels[i] ? 1 : 0;
        }
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(count);
      sel.cv_accuracy.push_back(acc);
      if (acc > sel.best_cv_accuracy) {
        sel.best_cv_accuracy = acc;
        best_index = index;
      }
      ++index;
    }
  }
  const double c = grid.c_values[best_index / gammas.size()];
  const double gamma = gammas[best_index % gammas.size()];
  sel.model = fit_svm(rows, count, dim, labels, cfg.kernel, c, gamma, cfg);
  return sel;
}

}  // namespace rdfs::defence
