#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdfs {

/// Raised for malformed or truncated artifact files. The message carries the
/// byte offset at which parsing stopped.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_f32_le(std::ostream& out, std::span<const float> values);
void write_u32_le(std::ostream& out, std::uint32_t value);
void write_u64_le(std::ostream& out, std::uint64_t value);

/// Cursor over an in-memory file image with bounds-checked little-endian reads.
class ByteReader {
 public:
  ByteReader(std::vector<char> bytes, std::string source);

  static ByteReader from_file(const std::filesystem::path& path);

  std::uint32_t u32();
  std::uint64_t u64();
  std::string bytes(std::size_t count);
  void f32(std::span<float> out);

  std::size_t offset() const { return offset_; }
  std::size_t remaining() const { return data_.size() - offset_; }
  const std::string& source() const { return source_; }
  std::span<const char> view(std::size_t begin, std::size_t count) const;

  [[noreturn]] void fail(const std::string& what) const;

 private:
  void require(std::size_t count, const char* what);

  std::vector<char> data_;
  std::string source_;
  std::size_t offset_ = 0;
};

std::vector<char> read_file_bytes(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames, so readers never see partial files.
void write_file_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace rdfs
