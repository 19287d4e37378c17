#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rdfs/ad/gradcheck.hpp"
#include "rdfs/ad/ops.hpp"
#include "rdfs/det/network.hpp"

using namespace rdfs;
using namespace rdfs::ad;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Weighted sum so every output coordinate carries a distinct gradient.
Tensor<double> weighted_sum(Tape<double>& tape, const Tensor<double>& y) {
  Tensor<double> w(y.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = std::sin(0.7 * static_cast<double>(i) + 0.3);
  return sum(tape, mul(tape, y, w));
}

constexpr double kStep = 1e-6;
constexpr double kTol = 1e-4;

}  // namespace

TEST(Autodiff, ConvGradientWrtInputAndKernels) {
  std::mt19937_64 rng(11);
  const auto k = random_tensor({3, 2, 3, 3}, rng);
  const auto x = random_tensor({2, 2, 6, 5}, rng);
  ScalarFn<double> by_input = [&](Tape<double>& t, const Tensor<double>& in) {
    return weighted_sum(t, conv2d(t, in, k, 2, 1));
  };
  ScalarFn<double> by_kernel = [&](Tape<double>& t, const Tensor<double>& kk) {
    return weighted_sum(t, conv2d(t, x, kk, 1, 2));
  };
  EXPECT_LT(finite_diff_check(by_input, x, kStep).max_relative_error, kTol);
  EXPECT_LT(finite_diff_check(by_kernel, k, kStep).max_relative_error, kTol);
}

TEST(Autodiff, DenseReluSoftmaxGradients) {
  std::mt19937_64 rng(12);
  const auto w = random_tensor({5, 4}, rng);
  const auto b = random_tensor({4}, rng);
  const auto x = random_tensor({3, 5}, rng);
  const std::vector<int> labels{0, 3, 1};
  ScalarFn<double> fn = [&](Tape<double>& t, const Tensor<double>& in) {
    return softmax_cross_entropy(t, relu(t, dense(t, in, w, b)), labels);
  };
  EXPECT_LT(finite_diff_check(fn, x, kStep).max_relative_error, kTol);
  ScalarFn<double> by_w = [&](Tape<double>& t, const Tensor<double>& ww) {
    return softmax_cross_entropy(t, dense(t, x, ww, b), labels);
  };
  EXPECT_LT(finite_diff_check(by_w, w, kStep).max_relative_error, kTol);
}

TEST(Autodiff, MaxPoolAndBatchNormGradients) {
  std::mt19937_64 rng(13);
  const auto x = random_tensor({3, 2, 4, 4}, rng);
  ScalarFn<double> pool = [&](Tape<double>& t, const Tensor<double>& in) {
    return weighted_sum(t, maxpool2d(t, in, 2, 2));
  };
  EXPECT_LT(finite_diff_check(pool, x, kStep).max_relative_error, kTol);

  const auto gamma = random_tensor({2}, rng, 0.5, 1.5);
  const auto beta = random_tensor({2}, rng);
  ScalarFn<double> bn = [&](Tape<double>& t, const Tensor<double>& in) {
    BatchNormState<double> state(2);
    return weighted_sum(t, batchnorm_train(t, in, gamma, beta, state));
  };
  EXPECT_LT(finite_diff_check(bn, x, kStep).max_relative_error, kTol);
}

TEST(Autodiff, ConvMatchesBruteForce) {
  std::mt19937_64 rng(14);
  const auto x = random_tensor({2, 3, 7, 6}, rng);
  const auto k = random_tensor({4, 3, 3, 3}, rng);
  auto tape = Tape<double>::inference();
  const auto y = conv2d(tape, x, k, 2, 1);
  std::size_t oh = 0, ow = 0;
  const auto ref = oracle::conv2d({x.data().begin(), x.data().end()}, 2, 3, 7, 6, {k.data().begin(), k.data().end()},
                                  4, 3, 3, 2, 1, oh, ow);
  ASSERT_EQ(y.shape(), (Shape{2, 4, oh, ow}));
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y.data()[i], ref[i], 1e-12);
}

TEST(Autodiff, InferenceTapeRecordsNothing) {
  std::mt19937_64 rng(15);
  auto x = random_tensor({2, 3}, rng);
  x.set_requires_grad(true);
  auto tape = Tape<double>::inference();
  relu(tape, x);
  EXPECT_EQ(tape.size(), 0u);
}

TEST(Autodiff, BackwardRejectsNonScalarLoss) {
  std::mt19937_64 rng(16);
  auto x = random_tensor({2, 3}, rng);
  x.set_requires_grad(true);
  Tape<double> tape;
  const auto y = relu(tape, x);
  EXPECT_THROW(tape.backward(y), std::invalid_argument);
}

TEST(Autodiff, SmallCnnGradientWrtInputAndParameters) {
  det::CnnArchitecture arch;
  arch.id = "tiny";
  arch.input_shape = {1, 8, 8};
  arch.layers = {det::ConvSpec{2, 5, 1, 2, true}, det::BatchNormSpec{}, det::ReluSpec{}, det::MaxPoolSpec{2, 2},
                 det::FlattenSpec{}, det::DenseSpec{3}, det::ReluSpec{}, det::DenseSpec{2}};
  det::Network<double> net(arch);
  net.initialize(5);
  std::mt19937_64 rng(17);
  const auto x = random_tensor({3, 1, 8, 8}, rng, 0, 1);
  const std::vector<int> labels{1, 0, 1};
  ScalarFn<double> by_input = [&](Tape<double>& t, const Tensor<double>& in) {
    return softmax_cross_entropy(t, net.forward(t, in, Mode::train), labels);
  };
  EXPECT_LT(finite_diff_check(by_input, x, kStep).max_relative_error, kTol);
  for (std::size_t p = 0; p < net.parameters().size(); ++p) {
    const auto saved = net.parameters()[p];
    ScalarFn<double> by_param = [&](Tape<double>& t, const Tensor<double>& v) {
      net.parameters()[p] = v;
      return softmax_cross_entropy(t, net.forward(t, x, Mode::train), labels);
    };
    EXPECT_LT(finite_diff_check(by_param, saved, kStep).max_relative_error, kTol) << "parameter " << p;
    net.parameters()[p] = saved;
  }
}
