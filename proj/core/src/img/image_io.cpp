#include "rdfs/img/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdfs/img/manipulations.hpp"

namespace rdfs::img {

namespace {

std::string next_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

std::size_t parse_size(const std::string& token, const std::filesystem::path& path) {
  try {
    return static_cast<std::size_t>(std::stoul(token));
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": bad PGM header field '" + token + "'");
  }
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error(path.string() + ": not a PGM file");
  const std::size_t width = parse_size(next_token(in), path);
  const std::size_t height = parse_size(next_token(in), path);
  const std::size_t maxval = parse_size(next_token(in), path);
  if (maxval == 0 || maxval > 255) throw std::runtime_error(path.string() + ": only 8-bit PGM is supported");
  std::vector<float> pixels(width * height);
  const double scale = 255.0 / static_cast<double>(maxval);
  if (magic == "P5") {
    std::vector<unsigned char> raw(pixels.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw std::runtime_error(path.string() + ": truncated PGM");
    for (std::size_t i = 0; i < raw.size(); ++i) pixels[i] = clamp_pixel(std::nearbyint(raw[i] * scale));
  } else {
    for (auto& p : pixels) p = clamp_pixel(std::nearbyint(static_cast<double>(parse_size(next_token(in), path)) * scale));
  }
  return GrayImage(width, height, std::move(pixels));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  for (float p : image.pixels()) out.put(static_cast<char>(static_cast<unsigned char>(std::lround(p))));
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

GrayImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw std::runtime_error("cannot open " + path.string());
  unsigned char signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw std::runtime_error(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> pixels;
  png_uint_32 width = 0, height = 0;
  bool colour = false;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path.string() + ": corrupt PNG");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  const int colour_type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (colour_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (colour_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int channels = png_get_channels(png, info);
  colour = channels == 3;
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  if (colour) {
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
    for (png_uint_32 y = 0; y < height; ++y)
      std::copy_n(pixels.data() + y * stride, width * 3, rgb.data() + static_cast<std::size_t>(y) * width * 3);
    return to_grayscale(rgb, width, height);
  }
  std::vector<float> gray(static_cast<std::size_t>(width) * height);
  for (png_uint_32 y = 0; y < height; ++y)
    for (png_uint_32 x = 0; x < width; ++x) gray[static_cast<std::size_t>(y) * width + x] = pixels[y * stride + x];
  return GrayImage(width, height, std::move(gray));
}

GrayImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw std::runtime_error(path.string() + ": unsupported image format (expected .png or .pgm)");
}

}  // namespace rdfs::img
