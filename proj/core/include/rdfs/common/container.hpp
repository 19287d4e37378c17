#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rdfs {

/// Layout: 8-byte magic | u32 format version | u32 header length |
/// u64 FNV-1a of header | header text | u64 float count | f32 values (LE).
/// The header is opaque text to this layer (callers store JSON).
struct Container {
  std::string header;
  std::vector<float> payload;
};

inline constexpr std::uint32_t kContainerVersion = 1;

void write_container(const std::filesystem::path& path, std::string_view magic, const Container& container);

/// Throws FormatError naming the byte offset on a bad magic, unsupported
/// version, header checksum mismatch, truncation, or trailing bytes.
Container read_container(const std::filesystem::path& path, std::string_view magic);

/// FNV-1a over the little-endian bytes of a float block.
std::uint64_t payload_checksum(std::span<const float> values);

}  // namespace rdfs
