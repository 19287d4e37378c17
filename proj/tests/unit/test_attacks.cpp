#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "rdfs/attack/adv_cache.hpp"
#include "rdfs/attack/attacks.hpp"
#include "rdfs/attack/box_lbfgs.hpp"
#include "rdfs/common/binary_io.hpp"

using namespace rdfs;
using namespace rdfs::attack;

namespace {

double l2(std::span<const float> a, std::span<const float> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
  return std::sqrt(s);
}

double range_of(std::span<const float> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

}  // namespace

TEST(Attacks, BoxLbfgsQuadraticSolutionIsClippedTarget) {
  const std::vector<double> t{-0.5, 0.3, 1.7, 0.9};
  Objective f = [&](std::span<const double> x, std::span<double> g) {
    double v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v += (x[i] - t[i]) * (x[i] - t[i]);
      g[i] = 2 * (x[i] - t[i]);
    }
    return v;
  };
  const std::vector<double> lo(4, 0.0), hi(4, 1.0);
  const auto r = minimize_box(f, {0.5, 0.5, 0.5, 0.5}, lo, hi);
  const std::vector<double> expect{0.0, 0.3, 1.0, 0.9};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(r.x[i], expect[i], 1e-6);
  EXPECT_TRUE(r.converged);
}

TEST(Attacks, BoxLbfgsRosenbrock) {
  Objective f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  const std::vector<double> lo(2, -2.0), hi(2, 2.0);
  BoxLbfgsOptions opt;
  opt.max_iterations = 500;
  opt.relative_tolerance = 0;
  const auto r = minimize_box(f, {-1.2, 1.0}, lo, hi, opt);
  EXPECT_NEAR(r.x[0], 1.0, 1e-4);
  EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(Attacks, IfgsmWithZeroGradientLeavesInputUnchanged) {
  const LinearTarget target({0.0, 0.0}, 1.0);
  const std::vector<float> x{0.3f, 0.6f};
  const auto out = ifgsm(target, x, IfgsmConfig::standard());
  EXPECT_FALSE(out.success);
  EXPECT_EQ(out.adversarial, x);
}

TEST(Attacks, RejectsInputAlreadyDecidedH0) {
  const LinearTarget target({1.0, 1.0}, -5.0);
  const std::vector<float> x{0.3f, 0.6f};
  EXPECT_THROW(ifgsm(target, x, IfgsmConfig::standard()), std::invalid_argument);
  EXPECT_THROW(pgd(target, x, PgdConfig{}), std::invalid_argument);
  EXPECT_THROW(lbfgs_attack(target, x, LbfgsConfig{}), std::invalid_argument);
}

TEST(Attacks, IfgsmPicksSmallestSuccessfulEpsilonOnLinearToy) {
  // With w = (1,1) both coordinates move together, so the dynamic range stays
  // 0.2 and each step lowers the margin by |w|_1 * eps * 0.2. The boundary is
  // crossed within S steps iff 0.4 * S * eps > margin.
  const double margin = 0.1718;
  const LinearTarget target({1.0, 1.0}, -1.2 + margin);
  const std::vector<float> x{0.7f, 0.5f};
  const auto cfg = IfgsmConfig::standard();
  const double threshold = margin / (2 * 0.2 * static_cast<double>(cfg.steps));
  double expected = 0;
  for (double e : cfg.epsilons) {
    if (e > threshold) {
      expected = e;
      break;
    }
  }
  ASSERT_GT(expected, 0);
  const auto out = ifgsm(target, x, cfg);
  EXPECT_TRUE(out.success);
  EXPECT_DOUBLE_EQ(out.hyperparameter, expected);
  EXPECT_EQ(target.decide(out.adversarial), img::Label::original);
  for (double e : cfg.epsilons) {
    if (e >= expected) break;
    EXPECT_FALSE(ifgsm_single(target, x, e, cfg.steps).success) << e;
  }
}

TEST(Attacks, LbfgsMatchesHyperplaneDistance) {
  const std::vector<double> w{30.0, -40.0};
  const double b = 15.0;
  const LinearTarget target(w, b);
  const std::vector<float> x{0.5f, 0.5f};
  const double dist = oracle::hyperplane_distance(w, b, {0.5, 0.5});
  const auto out = lbfgs_attack(target, x, LbfgsConfig{});
  ASSERT_TRUE(out.success);
  EXPECT_NEAR(l2(out.adversarial, x), dist, 0.05 * dist);
}

TEST(Attacks, LbfgsExtendsSweepWhenGridNeverFails) {
  // A single small c always succeeds; without continuing the sweep the result
  // overshoots the boundary instead of approximating the minimal perturbation.
  const std::vector<double> w{30.0, -40.0};
  const double b = 15.0;
  const LinearTarget target(w, b);
  const std::vector<float> x{0.5f, 0.5f};
  const double dist = oracle::hyperplane_distance(w, b, {0.5, 0.5});
  LbfgsConfig cfg;
  cfg.c_grid = {1e-3};
  const auto out = lbfgs_attack(target, x, cfg);
  ASSERT_TRUE(out.success);
  EXPECT_NEAR(l2(out.adversarial, x), dist, 0.05 * dist);
  EXPECT_GT(out.hyperparameter, 1e-3);
}

TEST(Attacks, LbfgsObjectiveAtZeroPerturbationIsLoss) {
  const LinearTarget target({2.0, -1.0, 0.5}, 0.3);
  const std::vector<float> x{0.2f, 0.1f, 0.9f};
  std::vector<float> g(3);
  const double j = target.loss_and_gradient(x, img::Label::original, g, {});
  const std::vector<double> z(x.begin(), x.end());
  std::vector<double> grad(3);
  EXPECT_DOUBLE_EQ(lbfgs_objective(target, x, 7.0, z, grad), j);
}

TEST(Attacks, LargerTradeoffNeverGivesLargerPerturbation) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  const LbfgsConfig cfg;
  std::size_t checked = 0;
  for (int s = 0; s < 20; ++s) {
    const std::vector<double> w{u(rng) * 20, -u(rng) * 20, u(rng) * 10};
    const std::vector<float> x{float(u(rng)), float(u(rng)), float(u(rng))};
    const double m = w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
    const LinearTarget target(w, -m + 1.0);  // margin 1 on the H1 side
    double prev = INFINITY;
    for (double c : cfg.c_grid) {
      const auto out = lbfgs_single(target, x, c, cfg);
      if (!out.success) continue;
      const double d = l2(out.adversarial, x);
      EXPECT_LE(d, prev + 1e-6) << "sample " << s << " c " << c;
      prev = d;
      ++checked;
    }
  }
  EXPECT_GT(checked, 20u);
}

TEST(Attacks, PgdRespectsAlphaBallAndDomain) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<float> px(0.1f, 0.9f);
  for (int s = 0; s < 30; ++s) {
    std::vector<double> w(8);
    for (auto& v : w) v = u(rng) * 5;
    std::vector<float> x(8);
    for (auto& v : x) v = px(rng);
    double m = 0;
    for (std::size_t i = 0; i < 8; ++i) m += w[i] * x[i];
    const LinearTarget target(w, -m + 0.5);
    for (bool search : {true, false}) {
      PgdConfig cfg;
      cfg.binary_search = search;
      const auto out = pgd(target, x, cfg);
      const double bound = out.hyperparameter * range_of(x) + 1e-6;
      for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_LE(std::abs(out.adversarial[i] - x[i]), bound);
        EXPECT_GE(out.adversarial[i], 0.0f);
        EXPECT_LE(out.adversarial[i], 1.0f);
      }
      if (out.success) EXPECT_EQ(target.decide(out.adversarial), img::Label::original);
    }
  }
}

TEST(Attacks, PgdWithZeroAlphaReturnsInput) {
  const LinearTarget target({1.0, -1.0}, 0.5);
  const std::vector<float> x{0.4f, 0.3f};
  PgdConfig cfg;
  cfg.alpha = 0;
  const auto out = pgd(target, x, cfg);
  EXPECT_FALSE(out.success);
  EXPECT_EQ(out.adversarial, x);
}

TEST(Attacks, AttacksAreDeterministic) {
  const LinearTarget target({3.0, -2.0, 1.0}, 0.4);
  const std::vector<float> x{0.4f, 0.3f, 0.5f};
  EXPECT_EQ(ifgsm(target, x, IfgsmConfig::standard()).adversarial,
            ifgsm(target, x, IfgsmConfig::standard()).adversarial);
  EXPECT_EQ(lbfgs_attack(target, x, {}).adversarial, lbfgs_attack(target, x, {}).adversarial);
}

TEST(Attacks, EmptyBatchGivesEmptySummary) {
  det::Network<float> net(det::bayar_style(det::Scale::desk));
  net.initialize(1);
  const det::CnnDetector detector(std::move(net), {"median", 1, 0, 0, 0});
  const auto batch = evaluate_attack_batch(detector, {}, 0, PgdConfig{});
  EXPECT_TRUE(batch.outcomes.empty());
  EXPECT_EQ(batch.summary.attempted, 0u);
  EXPECT_EQ(batch.summary.succeeded, 0u);
  EXPECT_EQ(batch.summary.success_rate, 0.0);
}

TEST(Attacks, ConfigValidation) {
  IfgsmConfig f{10, {0.02, 0.01}};
  EXPECT_THROW(f.validate(), std::invalid_argument);
  f.epsilons.clear();
  EXPECT_THROW(f.validate(), std::invalid_argument);
  LbfgsConfig l;
  l.c_grid = {1.0, 0.5};
  EXPECT_THROW(l.validate(), std::invalid_argument);
  EXPECT_EQ(IfgsmConfig::standard().epsilons.size(), 100u);
  EXPECT_DOUBLE_EQ(IfgsmConfig::standard().epsilons.back(), 0.1);
}

TEST(Attacks, AdversarialCacheRoundTrip) {
  AdvCache cache;
  cache.task = "median";
  cache.attack = "pgd";
  cache.model_fingerprint = 42;
  cache.input_size = 3;
  cache.entries.push_back({7, {{0.1f, 0.2f, 0.3f}, true, 51.5, 0.3, 12}});
  cache.entries.push_back({9, {{0.4f, 0.5f, 0.6f}, false, INFINITY, 0.6, 40}});
  const auto stem = std::filesystem::temp_directory_path() / "rdfs_unit_cache";
  save_adv_cache(stem, cache);
  const auto back = load_adv_cache(stem);
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[0].outcome.adversarial, cache.entries[0].outcome.adversarial);
  EXPECT_EQ(back.entries[1].patch_id, 9u);
  EXPECT_TRUE(std::isinf(back.entries[1].outcome.psnr_db));
  EXPECT_EQ(back.model_fingerprint, 42u);

  // A block file that no longer matches the index is rejected.
  std::filesystem::resize_file(adv_cache_blocks_path(stem), 20);
  EXPECT_THROW(load_adv_cache(stem), FormatError);
  std::filesystem::remove(adv_cache_blocks_path(stem));
  std::filesystem::remove(adv_cache_index_path(stem));
}
