#include "rdfs/attack/attacks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "rdfs/img/manipulations.hpp"

namespace rdfs::attack {

void IfgsmConfig::validate() const {
  if (steps == 0) throw std::invalid_argument("ifgsm: steps must be >= 1");
  if (epsilons.empty()) throw std::invalid_argument("ifgsm: empty epsilon grid");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0)) throw std::invalid_argument("ifgsm: epsilons must be > 0");
    if (i > 0 && !(epsilons[i] > epsilons[i - 1])) throw std::invalid_argument("ifgsm: epsilons must ascend");
  }
}

IfgsmConfig IfgsmConfig::standard() {
  IfgsmConfig cfg;
  for (int k = 1; k <= 100; ++k) cfg.epsilons.push_back(0.001 * k);
  return cfg;
}

void PgdConfig::validate() const {
  if (!(epsilon > 0)) throw std::invalid_argument("pgd: epsilon must be > 0");
  if (!(alpha >= 0)) throw std::invalid_argument("pgd: alpha must be >= 0");
  if (steps == 0) throw std::invalid_argument("pgd: steps must be >= 1");
}

void LbfgsConfig::validate() const {
  if (c_grid.empty()) throw std::invalid_argument("lbfgs: empty c grid");
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] > 0)) throw std::invalid_argument("lbfgs: c values must be > 0");
    if (i > 0 && !(c_grid[i] > c_grid[i - 1])) throw std::invalid_argument("lbfgs: c grid must ascend");
  }
  if (max_iterations == 0 || memory == 0) throw std::invalid_argument("lbfgs: iterations and memory must be >= 1");
}

std::string_view attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::pgd: return "pgd";
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::bfgs: return "bfgs";
  }
  return "?";
}

AttackKind parse_attack(std::string_view name) {
  if (name == "pgd") return AttackKind::pgd;
  if (name == "fgsm" || name == "ifgsm") return AttackKind::fgsm;
  if (name == "bfgs" || name == "lbfgs") return AttackKind::bfgs;
  throw std::invalid_argument("unknown attack '" + std::string(name) + "' (expected pgd, fgsm or bfgs)");
}

AttackKind kind_of(const AttackConfig& cfg) {
  if (std::holds_alternative<PgdConfig>(cfg)) return AttackKind::pgd;
  if (std::holds_alternative<IfgsmConfig>(cfg)) return AttackKind::fgsm;
  return AttackKind::bfgs;
}

namespace {

constexpr img::Label kH0 = img::Label::original;
constexpr img::Label kH1 = img::Label::manipulated;

void require_h1(const AttackTarget& target, std::span<const float> x) {
  if (x.size() != target.input_size()) {
    throw std::invalid_argument("attack: input has " + std::to_string(x.size()) + " values, model expects " +
                                std::to_string(target.input_size()));
  }
  if (target.decide(x) != kH1) throw std::invalid_argument("attack: input is already classified H0");
}

double dynamic_range(std::span<const float> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return static_cast<double>(*hi) - *lo;
}

double sign(float g) { return g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0); }

double mse(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

void finish(const AttackTarget& target, std::span<const float> x, AttackOutcome& out) {
  // Success is always re-derived from the plain inference path.
  out.success = target.decide(out.adversarial) == kH0;
  out.psnr_db = img::psnr(x, out.adversarial, 1.0);
}

// Signed-gradient ascent on CE(., H1) with per-pixel bounds [lo, hi].
AttackOutcome signed_ascent(const AttackTarget& target, std::span<const float> x, double epsilon, std::size_t steps,
                            std::span<const float> lo, std::span<const float> hi) {
  AttackOutcome out;
  out.adversarial.assign(x.begin(), x.end());
  auto& z = out.adversarial;
  std::vector<float> grad(z.size());
  float logits[2];
  for (std::size_t i = 0; i <= steps; ++i) {
    if (i < steps) {
      target.loss_and_gradient(z, kH1, grad, logits);
    } else {
      const auto l = target.logits(z);
      logits[0] = l[0];
      logits[1] = l[1];
    }
    if (i > 0 && det::decide(logits) == kH0) break;
    if (i == steps) break;
    const double step = epsilon * dynamic_range(z);
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double v = static_cast<double>(z[j]) + step * sign(grad[j]);
      z[j] = std::clamp(static_cast<float>(v), lo[j], hi[j]);
    }
    out.iterations = i + 1;
  }
  return out;
}

}  // namespace

AttackOutcome ifgsm_single(const AttackTarget& target, std::span<const float> x, double epsilon, std::size_t steps) {
  const std::vector<float> lo(x.size(), 0.0f), hi(x.size(), 1.0f);
  auto out = signed_ascent(target, x, epsilon, steps, lo, hi);
  out.hyperparameter = epsilon;
  finish(target, x, out);
  return out;
}

AttackOutcome ifgsm(const AttackTarget& target, std::span<const float> x, const IfgsmConfig& cfg) {
  cfg.validate();
  require_h1(target, x);
  std::optional<AttackOutcome> best;
  double best_mse = std::numeric_limits<double>::infinity();
  AttackOutcome last;
  for (double eps : cfg.epsilons) {
    auto out = ifgsm_single(target, x, eps, cfg.steps);
    if (out.success) {
      const double m = mse(x, out.adversarial);
      if (m < best_mse) {
        best_mse = m;
        best = out;
      }
    }
    last = std::move(out);
  }
  return best ? *best : last;
}

AttackOutcome pgd_single(const AttackTarget& target, std::span<const float> x, double epsilon, double alpha,
                         std::size_t steps) {
  const double bound = alpha * dynamic_range(x);
  std::vector<float> lo(x.size()), hi(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    lo[j] = static_cast<float>(std::max(0.0, static_cast<double>(x[j]) - bound));
    hi[j] = static_cast<float>(std::min(1.0, static_cast<double>(x[j]) + bound));
    lo[j] = std::min(lo[j], x[j]);
    hi[j] = std::max(hi[j], x[j]);
  }
  AttackOutcome out;
  if (alpha == 0) {
    out.adversarial.assign(x.begin(), x.end());
  } else {
    out = signed_ascent(target, x, epsilon, steps, lo, hi);
  }
  out.hyperparameter = alpha;
  finish(target, x, out);
  return out;
}

AttackOutcome pgd(const AttackTarget& target, std::span<const float> x, const PgdConfig& cfg) {
  cfg.validate();
  require_h1(target, x);
  if (cfg.alpha == 0 || !cfg.binary_search) return pgd_single(target, x, cfg.epsilon, cfg.alpha, cfg.steps);
  // Bisection over the bound with the step kept at a fixed fraction of it.
  const double ratio = cfg.epsilon / cfg.alpha;
  double lo = 0, hi = 2 * cfg.alpha;
  auto best = pgd_single(target, x, ratio * hi, hi, cfg.steps);
  if (!best.success) return best;
  for (std::size_t r = 0; r < cfg.search_rounds; ++r) {
    const double mid = 0.5 * (lo + hi);
    auto out = pgd_single(target, x, ratio * mid, mid, cfg.steps);
    if (out.success) {
      hi = mid;
      best = std::move(out);
    } else {
      lo = mid;
    }
  }
  return best;
}

double lbfgs_objective(const AttackTarget& target, std::span<const float> x, double c, std::span<const double> z,
                       std::span<double> grad) {
  std::vector<float> zf(z.begin(), z.end());
  std::vector<float> g(z.size());
  const double loss = target.loss_and_gradient(zf, kH0, g, {});
  double dist = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - static_cast<double>(x[i]);
    dist += d * d;
    grad[i] = 2 * c * d + g[i];
  }
  return c * dist + loss;
}

AttackOutcome lbfgs_single(const AttackTarget& target, std::span<const float> x, double c, const LbfgsConfig& cfg) {
  const std::size_t n = x.size();
  const std::vector<double> lower(n, 0.0), upper(n, 1.0);
  BoxLbfgsOptions opt;
  opt.memory = cfg.memory;
  opt.max_iterations = cfg.max_iterations;
  const auto res = minimize_box(
      [&](std::span<const double> z, std::span<double> g) { return lbfgs_objective(target, x, c, z, g); },
      std::vector<double>(x.begin(), x.end()), lower, upper, opt);
  AttackOutcome out;
  out.adversarial.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.adversarial[i] = std::clamp(static_cast<float>(res.x[i]), 0.0f, 1.0f);
  out.hyperparameter = c;
  out.iterations = res.evaluations;
  finish(target, x, out);
  return out;
}

AttackOutcome lbfgs_attack(const AttackTarget& target, std::span<const float> x, const LbfgsConfig& cfg) {
  cfg.validate();
  require_h1(target, x);
  std::vector<AttackOutcome> runs;
  std::optional<double> c_success, c_failure;
  for (double c : cfg.c_grid) {
    runs.push_back(lbfgs_single(target, x, c, cfg));
    if (runs.back().success) {
      c_success = c;
    } else if (c_success) {
      c_failure = c;
      break;
    }
  }
  if (c_success && !c_failure && *c_success == cfg.c_grid.back()) {
    const double ratio = cfg.c_grid.size() > 1 ? cfg.c_grid.back() / cfg.c_grid[cfg.c_grid.size() - 2] : 10.0;
    double c = cfg.c_grid.back();
    for (std::size_t e = 0; e < cfg.extend_steps; ++e) {
      c *= ratio;
      runs.push_back(lbfgs_single(target, x, c, cfg));
      if (!runs.back().success) {
        c_failure = c;
        break;
      }
      c_success = c;
    }
  }
  if (c_success && c_failure) {
    double good = *c_success, bad = *c_failure;
    for (std::size_t s = 0; s < cfg.bisection_steps; ++s) {
      const double mid = std::sqrt(good * bad);
      runs.push_back(lbfgs_single(target, x, mid, cfg));
      (runs.back().success ? good : bad) = mid;
    }
  }
  const AttackOutcome* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    if (!r.success) continue;
    const double d = mse(x, r.adversarial);
    if (d < best_dist) {
      best_dist = d;
      best = &r;
    }
  }
  return best != nullptr ? *best : runs.front();
}

AttackOutcome run_attack(const AttackTarget& target, std::span<const float> x, const AttackConfig& cfg) {
  return std::visit(
      [&](const auto& c) -> AttackOutcome {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, IfgsmConfig>) return ifgsm(target, x, c);
        else if constexpr (std::is_same_v<T, PgdConfig>) return pgd(target, x, c);
        else return lbfgs_attack(target, x, c);
      },
      cfg);
}

std::vector<float> quantize_model_units(std::span<const float> x) {
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::nearbyint(std::clamp(x[i], 0.0f, 1.0f) * 255.0f) / 255.0f;
  }
  return out;
}

AttackSummary summarize(const AttackTarget& target, const std::vector<AttackOutcome>& outcomes) {
  AttackSummary s;
  s.attempted = outcomes.size();
  double psnr_sum = 0;
  s.min_psnr = std::numeric_limits<double>::infinity();
  for (const auto& o : outcomes) {
    if (!o.success) continue;
    ++s.succeeded;
    if (target.decide(quantize_model_units(o.adversarial)) == kH0) ++s.succeeded_quantized;
    psnr_sum += o.psnr_db;
    s.min_psnr = std::min(s.min_psnr, o.psnr_db);
  }
  if (s.attempted > 0) {
    s.success_rate = static_cast<double>(s.succeeded) / static_cast<double>(s.attempted);
    s.quantized_success_rate = static_cast<double>(s.succeeded_quantized) / static_cast<double>(s.attempted);
  }
  if (s.succeeded > 0) {
    s.mean_psnr = psnr_sum / static_cast<double>(s.succeeded);
  } else {
    s.min_psnr = 0;
  }
  return s;
}

AttackBatch evaluate_attack_batch(const det::CnnDetector& detector, std::span<const float> samples, std::size_t count,
                                  const AttackConfig& cfg, std::size_t threads) {
  const std::size_t per = detector.input_size();
  if (samples.size() != count * per) throw std::invalid_argument("evaluate_attack_batch: sample size mismatch");
  AttackBatch batch;
  CnnTarget target(detector);
  if (count == 0) {
    batch.summary = summarize(target, batch.outcomes);
    return batch;
  }
  const auto logits = detector.logits(samples, count);
  for (std::size_t i = 0; i < count; ++i) {
    if (det::decide(std::span<const float>(logits).subspan(2 * i, 2)) != kH1) {
      throw std::invalid_argument("evaluate_attack_batch: sample " + std::to_string(i) + " is not classified H1");
    }
  }
  batch.outcomes.resize(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        batch.outcomes[i] = run_attack(target, samples.subspan(i * per, per), cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, count);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  batch.summary = summarize(target, batch.outcomes);
  return batch;
}

}  // namespace rdfs::attack
