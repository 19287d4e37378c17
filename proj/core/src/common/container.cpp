#include "rdfs/common/container.hpp"

#include <bit>
#include <sstream>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/rng.hpp"

namespace rdfs {

namespace {

void check_magic(std::string_view magic) {
  if (magic.size() != 8) throw std::invalid_argument("container magic must be 8 bytes");
}

}  // namespace

void write_container(const std::filesystem::path& path, std::string_view magic, const Container& container) {
  check_magic(magic);
  std::ostringstream out(std::ios::binary);
  out.write(magic.data(), 8);
  write_u32_le(out, kContainerVersion);
  write_u32_le(out, static_cast<std::uint32_t>(container.header.size()));
  write_u64_le(out, fnv1a64(container.header));
  out.write(container.header.data(), static_cast<std::streamsize>(container.header.size()));
  write_u64_le(out, container.payload.size());
  write_f32_le(out, container.payload);
  write_file_atomically(path, out.str());
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
  check_magic(magic);
  auto reader = ByteReader::from_file(path);
  if (reader.bytes(8) != magic) {
    reader.fail("bad magic (expected '" + std::string(magic) + "')");
  }
  const auto version = reader.u32();
  if (version != kContainerVersion) reader.fail("unsupported format version " + std::to_string(version));
  const auto header_len = reader.u32();
  const auto checksum = reader.u64();
  Container c;
  c.header = reader.bytes(header_len);
  if (fnv1a64(c.header) != checksum) reader.fail("header checksum mismatch");
  const auto count = reader.u64();
  if (count > reader.remaining() / 4) {
    reader.fail("truncated payload: " + std::to_string(count) + " floats declared, " +
                std::to_string(reader.remaining()) + " bytes remain");
  }
  c.payload.resize(count);
  reader.f32(c.payload);
  if (reader.remaining() != 0) reader.fail(std::to_string(reader.remaining()) + " trailing bytes");
  return c;
}

std::uint64_t payload_checksum(std::span<const float> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    const unsigned char bytes[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                    static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    h = fnv1a64(bytes, 4, h);
  }
  return h;
}

}  // namespace rdfs
