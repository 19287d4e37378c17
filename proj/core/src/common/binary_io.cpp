#include "rdfs/common/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rdfs {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

namespace {

template <typename T>
T byteswap_if_needed(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

}  // namespace

void write_f32_le(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) {
      auto bits = byteswap_if_needed(std::bit_cast<std::uint32_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

void write_u32_le(std::ostream& out, std::uint32_t value) {
  value = byteswap_if_needed(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

void write_u64_le(std::ostream& out, std::uint64_t value) {
  value = byteswap_if_needed(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

ByteReader::ByteReader(std::vector<char> bytes, std::string source)
    : data_(std::move(bytes)), source_(std::move(source)) {}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  return ByteReader(read_file_bytes(path), path.string());
}

void ByteReader::fail(const std::string& what) const {
  std::ostringstream msg;
  msg << source_ << ": " << what << " at byte offset " << offset_ << " (file size " << data_.size()
      << ")";
  throw FormatError(msg.str());
}

void ByteReader::require(std::size_t count, const char* what) {
  if (remaining() < count) {
    fail(std::string("truncated while reading ") + what + " (need " + std::to_string(count) +
         " bytes, have " + std::to_string(remaining()) + ")");
  }
}

std::uint32_t ByteReader::u32() {
  require(4, "u32");
  std::uint32_t value;
  std::memcpy(&value, data_.data() + offset_, 4);
  offset_ += 4;
  return byteswap_if_needed(value);
}

std::uint64_t ByteReader::u64() {
  require(8, "u64");
  std::uint64_t value;
  std::memcpy(&value, data_.data() + offset_, 8);
  offset_ += 8;
  return byteswap_if_needed(value);
}

std::string ByteReader::bytes(std::size_t count) {
  require(count, "byte block");
  std::string out(data_.data() + offset_, count);
  offset_ += count;
  return out;
}

void ByteReader::f32(std::span<float> out) {
  require(out.size_bytes(), "f32 array");
  std::memcpy(out.data(), data_.data() + offset_, out.size_bytes());
  if constexpr (std::endian::native == std::endian::big) {
    for (float& v : out) v = std::bit_cast<float>(byteswap_if_needed(std::bit_cast<std::uint32_t>(v)));
  }
  offset_ += out.size_bytes();
}

std::span<const char> ByteReader::view(std::size_t begin, std::size_t count) const {
  if (begin + count > data_.size()) throw FormatError(source_ + ": view out of range");
  return {data_.data() + begin, count};
}

std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<char> bytes(size);
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("short read on " + path.string());
  return bytes;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed on " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rdfs
