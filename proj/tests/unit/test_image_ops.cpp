#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "oracles.hpp"
#include "rdfs/img/image_io.hpp"
#include "rdfs/img/manipulations.hpp"
#include "rdfs/img/patches.hpp"
#include "rdfs/img/texture.hpp"

using namespace rdfs::img;

namespace {

GrayImage random_image(std::size_t w, std::size_t h, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<float> px(w * h);
  for (auto& v : px) v = static_cast<float>(u(rng));
  return GrayImage(w, h, std::move(px));
}

}  // namespace

TEST(ImageOps, MedianMatchesSortedWindowOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t w = 5 + rng() % 12, h = 5 + rng() % 12;
    const auto im = random_image(w, h, rng);
    for (std::size_t window : {3u, 5u}) {
      const auto got = median_filter(im, window);
      const auto ref = oracle::median({im.pixels().begin(), im.pixels().end()}, w, h, window);
      ASSERT_EQ(got.size(), ref.size());
      for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_EQ(got.pixels()[i], ref[i]) << "trial " << trial;
    }
  }
}

TEST(ImageOps, MedianOfConstantImageIsConstant) {
  const GrayImage im(9, 7, 42.0f);
  EXPECT_EQ(median_filter(im, 5), im);
}

TEST(ImageOps, MedianRejectsEvenWindow) {
  const GrayImage im(9, 7, 1.0f);
  EXPECT_THROW(median_filter(im, 4), std::invalid_argument);
}

TEST(ImageOps, ResizeUsesFlooredDimensions) {
  const GrayImage im(64, 50, 10.0f);
  const auto r = resize_bilinear(im, 0.8);
  EXPECT_EQ(r.width(), 51u);
  EXPECT_EQ(r.height(), 40u);
  for (float v : r.pixels()) EXPECT_FLOAT_EQ(v, 10.0f);
}

TEST(ImageOps, ResizeByOneIsIdentity) {
  std::mt19937_64 rng(22);
  const auto im = random_image(13, 11, rng);
  EXPECT_EQ(resize_bilinear(im, 1.0), im);
}

TEST(ImageOps, ClaheKeepsConstantImage) {
  const GrayImage im(64, 64, 77.0f);
  EXPECT_EQ(clahe(im), im);
}

TEST(ImageOps, ClaheStaysInRangeAndIsMonotoneOnRamp) {
  GrayImage ramp(64, 64);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) ramp.set(x, y, static_cast<float>(x * 4));
  const auto out = clahe(ramp, {1, 1, 2.0});
  for (std::size_t x = 1; x < 64; ++x) EXPECT_LE(out.at(x - 1, 10), out.at(x, 10));
  for (float v : out.pixels()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 255.0f);
  }
}

TEST(ImageOps, PsnrKnownValues) {
  const GrayImage a(8, 8, 100.0f);
  GrayImage b = a;
  EXPECT_TRUE(std::isinf(psnr(a, b)));
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) b.set(x, y, 101.0f);
  // MSE = 1
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(255.0 * 255.0), 1e-9);
}

TEST(ImageOps, GrayscaleUsesRec601Weights) {
  const std::vector<std::uint8_t> rgb{255, 0, 0, 0, 255, 0, 0, 0, 255, 200, 100, 50};
  const auto g = to_grayscale(rgb, 4, 1);
  EXPECT_EQ(g.at(0, 0), std::round(0.299f * 255));
  EXPECT_EQ(g.at(1, 0), std::round(0.587f * 255));
  EXPECT_EQ(g.at(2, 0), std::round(0.114f * 255));
  EXPECT_EQ(g.at(3, 0), std::round(0.299f * 200 + 0.587f * 100 + 0.114f * 50));
}

TEST(ImageOps, PgmRoundTrip) {
  std::mt19937_64 rng(23);
  const auto im = random_image(17, 9, rng);
  const auto path = std::filesystem::temp_directory_path() / "rdfs_unit_roundtrip.pgm";
  write_pgm(path, im);
  EXPECT_EQ(read_image(path), im);
  std::filesystem::remove(path);
}

TEST(ImageOps, PatchOffsetsDistinctInBoundsDeterministic) {
  const auto a = sample_patch_offsets(40, 30, 8, 50, 99);
  const auto b = sample_patch_offsets(40, 30, 8, 50, 99);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 50u);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& o : a) {
    EXPECT_LE(o.x + 8, 40u);
    EXPECT_LE(o.y + 8, 30u);
    EXPECT_TRUE(seen.insert({o.x, o.y}).second);
  }
  EXPECT_EQ(sample_patch_offsets(10, 10, 8, 100, 1).size(), 9u);
}

TEST(ImageOps, TextureIsDeterministicAndIntegral) {
  const auto a = generate_texture(48, 40, 5);
  EXPECT_EQ(a, generate_texture(48, 40, 5));
  EXPECT_NE(a, generate_texture(48, 40, 6));
  for (float v : a.pixels()) EXPECT_EQ(v, std::round(v));
}
