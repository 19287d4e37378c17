#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/defence/reduced_detector.hpp"

using namespace rdfs;
using namespace rdfs::defence;

namespace {

// Two classes in n dimensions whose means differ on every coordinate.
FeatureSet blobs(std::size_t count, std::size_t n, std::uint64_t seed, float shift = 1.0f) {
  FeatureSet fs;
  fs.sample_shape = {n};
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0, 1);
  for (std::size_t i = 0; i < count; ++i) {
    const int y = static_cast<int>(i % 2);
    for (std::size_t d = 0; d < n; ++d) fs.values.push_back(g(rng) + (y ? shift : -shift));
    fs.labels.push_back(y);
  }
  return fs;
}

double accuracy(const SvmModel& m, const std::vector<float>& rows, const std::vector<int>& labels) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = m.decision(std::span<const float>(rows).subspan(i * m.dim, m.dim)) > 0 ? 1 : 0;
    ok += pred == labels[i];
  }
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

}  // namespace

TEST(Rdfs, SelectionIsSortedDistinctAndKeyed) {
  const auto a = select_features(123, 256, 30);
  EXPECT_EQ(a.k, 30u);
  EXPECT_TRUE(std::is_sorted(a.indices.begin(), a.indices.end()));
  EXPECT_EQ(std::set<std::size_t>(a.indices.begin(), a.indices.end()).size(), 30u);
  EXPECT_LT(a.indices.back(), 256u);
  EXPECT_EQ(select_features(123, 256, 30), a);
  EXPECT_NE(select_features(124, 256, 30), a);
  EXPECT_EQ(select_features(5, 40, 40).indices.size(), 40u);
  EXPECT_THROW(select_features(5, 40, 41), std::invalid_argument);
  EXPECT_THROW(select_features(5, 40, 0), std::invalid_argument);
}

TEST(Rdfs, SelectionIsUniformOverCoordinates) {
  // Each coordinate is picked with probability k/n; check counts within 5 sigma.
  const std::size_t n = 50, k = 10, trials = 4000;
  std::vector<std::size_t> hits(n, 0);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t i : select_features(t * 7919 + 1, n, k).indices) ++hits[i];
  }
  const double p = static_cast<double>(k) / n;
  const double mean = p * trials, sd = std::sqrt(trials * p * (1 - p));
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(static_cast<double>(hits[i]), mean, 5 * sd) << "coordinate " << i;
}

TEST(Rdfs, GatherReadsOnlySelectedCoordinates) {
  const auto s = select_features(9, 12, 4);
  std::vector<float> rows(2 * 12, std::numeric_limits<float>::quiet_NaN());
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t i : s.indices) rows[r * 12 + i] = static_cast<float>(r * 100 + i);
  const auto g = s.gather(rows, 2);
  ASSERT_EQ(g.size(), 8u);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g[r * 4 + j], static_cast<float>(r * 100 + s.indices[j]));
}

TEST(Rdfs, LinearSvmSeparatesToySet) {
  // Two clusters in 2-D separated by a wide margin.
  std::vector<float> rows;
  std::vector<int> labels;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<float> u(-1, 1);
  for (int i = 0; i < 200; ++i) {
    const int y = i % 2;
    rows.push_back(u(rng) + (y ? 3.0f : -3.0f));
    rows.push_back(u(rng) + (y ? 2.0f : -2.0f));
    labels.push_back(y);
  }
  SvmConfig cfg;
  cfg.seed = 1;
  const auto m = fit_svm(rows, 200, 2, labels, SvmKernel::linear, 10.0, 0.0, cfg);
  EXPECT_EQ(accuracy(m, rows, labels), 1.0);
}

TEST(Rdfs, RbfBeatsLinearOnConcentricCircles) {
  std::vector<float> rows;
  std::vector<int> labels;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> angle(0, 2 * M_PI), jitter(-0.1, 0.1);
  for (int i = 0; i < 400; ++i) {
    const int y = i % 2;
    const double r = (y ? 1.0 : 2.0) + jitter(rng), a = angle(rng);
    rows.push_back(static_cast<float>(r * std::cos(a)));
    rows.push_back(static_cast<float>(r * std::sin(a)));
    labels.push_back(y);
  }
  SvmConfig cfg;
  cfg.seed = 2;
  cfg.kernel = SvmKernel::linear;
  const auto lin = train_svm_cv(rows, 400, 2, labels, cfg);
  cfg.kernel = SvmKernel::rbf;
  const auto rbf = train_svm_cv(rows, 400, 2, labels, cfg);
  const double acc_lin = accuracy(lin.model, rows, labels), acc_rbf = accuracy(rbf.model, rows, labels);
  EXPECT_GE(acc_rbf - acc_lin, 0.40) << "rbf " << acc_rbf << " linear " << acc_lin;
}

TEST(Rdfs, CvChoosesFromSuppliedGrid) {
  const auto fs = blobs(120, 3, 43, 0.7f);
  for (auto kernel : {SvmKernel::linear, SvmKernel::rbf}) {
    SvmConfig cfg;
    cfg.kernel = kernel;
    cfg.seed = 3;
    cfg.grid = SvmGrid{{0.05, 0.5, 5.0}, {0.2, 2.0}};
    const auto sel = train_svm_cv(fs.values, fs.count(), 3, fs.labels, cfg);
    EXPECT_NE(std::find(cfg.grid->c_values.begin(), cfg.grid->c_values.end(), sel.model.c), cfg.grid->c_values.end());
    if (kernel == SvmKernel::rbf) {
      EXPECT_NE(std::find(cfg.grid->gamma_values.begin(), cfg.grid->gamma_values.end(), sel.model.gamma),
                cfg.grid->gamma_values.end());
      EXPECT_EQ(sel.cv_accuracy.size(), 6u);
    } else {
      EXPECT_EQ(sel.cv_accuracy.size(), 3u);
    }
    EXPECT_EQ(sel.best_cv_accuracy, *std::max_element(sel.cv_accuracy.begin(), sel.cv_accuracy.end()));
  }
}

class ReducedDetectors : public ::testing::Test {
 protected:
  static constexpr std::size_t kN = 40, kK = 8;
  FeatureSet train = blobs(300, kN, 51);
  FeatureSet val = blobs(100, kN, 52);
  SecretKey key = 0x9e3779b97f4a7c15ULL;
  FeatureSubset subset = select_features(key, kN, kK);

  ReducedDetector fc() const {
    det::TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.beta1 = 0.9;
    cfg.max_epochs = 5;
    cfg.seed = 4;
    return train_reduced_fc(train, val, key, subset, {6}, cfg);
  }
  ReducedDetector svm(SvmKernel kernel) const {
    SvmConfig cfg;
    cfg.kernel = kernel;
    cfg.seed = 5;
    cfg.grid = SvmGrid{{0.1, 1.0}, {0.1}};
    return train_svm(train, key, subset, cfg);
  }
};

TEST_F(ReducedDetectors, NanInUnselectedFeaturesNeverChangesOutput) {
  std::vector<std::size_t> unselected;
  for (std::size_t i = 0; i < kN; ++i) {
    if (!std::binary_search(subset.indices.begin(), subset.indices.end(), i)) unselected.push_back(i);
  }
  auto poisoned = val.values;
  for (std::size_t r = 0; r < val.count(); ++r)
    for (std::size_t i : unselected) poisoned[r * kN + i] = std::numeric_limits<float>::quiet_NaN();
  for (const auto& det : {fc(), svm(SvmKernel::linear), svm(SvmKernel::rbf)}) {
    const auto a = det.predict_batch(val.values, val.count());
    const auto b = det.predict_batch(poisoned, val.count());
    for (std::size_t r = 0; r < a.size(); ++r) {
      EXPECT_EQ(a[r].decision, b[r].decision);
      EXPECT_EQ(a[r].score, b[r].score);
    }
  }
}

TEST_F(ReducedDetectors, DetectorsLearnTheTask) {
  for (const auto& det : {fc(), svm(SvmKernel::linear), svm(SvmKernel::rbf)}) {
    const auto d = det.predict_batch(val.values, val.count());
    std::size_t ok = 0;
    for (std::size_t r = 0; r < d.size(); ++r) ok += static_cast<int>(d[r].decision) == val.labels[r];
    EXPECT_GE(static_cast<double>(ok) / static_cast<double>(d.size()), 0.9) << kind_name(det.kind());
  }
}

TEST_F(ReducedDetectors, SaveLoadRoundTripNeedsTheKey) {
  const auto path = std::filesystem::temp_directory_path() / "rdfs_unit_reduced.rdfsred";
  for (const auto& det : {fc(), svm(SvmKernel::linear), svm(SvmKernel::rbf)}) {
    save_reduced(path, det);
    const auto loaded = load_reduced(path, key);
    EXPECT_EQ(loaded.subset(), det.subset());
    const auto a = det.predict_batch(val.values, val.count());
    const auto b = loaded.predict_batch(val.values, val.count());
    for (std::size_t r = 0; r < a.size(); ++r) EXPECT_EQ(a[r].score, b[r].score);
    EXPECT_THROW(load_reduced(path, key + 1), std::exception);

    // Neither the raw key nor the index list is stored.
    const auto bytes = read_file_bytes(path);
    const std::string text(bytes.begin(), bytes.end());
    EXPECT_EQ(text.find(std::to_string(key)), std::string::npos);
    EXPECT_EQ(text.find("indices"), std::string::npos);
  }
  std::filesystem::remove(path);
}
