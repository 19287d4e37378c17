#include "rdfs/attack/adv_cache.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/container.hpp"

namespace rdfs::attack {

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  auto p = stem;
  p += suffix;
  return p;
}

// PSNR is +inf for an unchanged patch; JSON has no infinity.
nlohmann::json psnr_json(double v) { return std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v); }
double psnr_value(const nlohmann::json& j) {
  return j.is_string() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

std::filesystem::path adv_cache_index_path(const std::filesystem::path& stem) { return with_suffix(stem, ".jsonl"); }
std::filesystem::path adv_cache_blocks_path(const std::filesystem::path& stem) { return with_suffix(stem, ".bin"); }

void save_adv_cache(const std::filesystem::path& stem, const AdvCache& cache) {
  std::vector<float> blocks;
  std::ostringstream index;
  for (const auto& e : cache.entries) {
    if (e.outcome.adversarial.size() != cache.input_size)
      throw std::invalid_argument("save_adv_cache: example size differs from input_size");
    blocks.insert(blocks.end(), e.outcome.adversarial.begin(), e.outcome.adversarial.end());
  }
  index << nlohmann::json{{"format_version", kContainerVersion},
                          {"task", cache.task},
                          {"attack", cache.attack},
                          {"model_fingerprint", cache.model_fingerprint},
                          {"input_size", cache.input_size},
                          {"count", cache.entries.size()},
                          {"blocks_fnv1a", payload_checksum(blocks)}}
               .dump()
        << '\n';
  std::size_t offset = 0;
  for (const auto& e : cache.entries) {
    index << nlohmann::json{{"patch_id", e.patch_id},
                            {"success", e.outcome.success},
                            {"psnr_db", psnr_json(e.outcome.psnr_db)},
                            {"hyperparameter", e.outcome.hyperparameter},
                            {"iterations", e.outcome.iterations},
                            {"offset", offset}}
                 .dump()
          << '\n';
    offset += cache.input_size;
  }
  std::ostringstream bin(std::ios::binary);
  write_f32_le(bin, blocks);
  write_file_atomically(adv_cache_blocks_path(stem), bin.str());
  write_file_atomically(adv_cache_index_path(stem), index.str());
}

AdvCache load_adv_cache(const std::filesystem::path& stem) {
  const auto index_path = adv_cache_index_path(stem);
  std::ifstream in(index_path);
  if (!in) throw std::runtime_error("cannot open " + index_path.string());
  AdvCache cache;
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& what) {
    throw FormatError(index_path.string() + ": line " + std::to_string(line_no) + ": " + what);
  };
  std::uint64_t checksum = 0;
  std::size_t count = 0;
  std::vector<std::size_t> offsets;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (line_no == 1) {
        if (j.at("format_version").get<std::uint32_t>() != kContainerVersion) bad("unsupported format version");
        cache.task = j.at("task");
        cache.attack = j.at("attack");
        cache.model_fingerprint = j.at("model_fingerprint");
        cache.input_size = j.at("input_size");
        count = j.at("count");
        checksum = j.at("blocks_fnv1a");
        continue;
      }
      CachedExample e;
      e.patch_id = j.at("patch_id");
      e.outcome.success = j.at("success");
      e.outcome.psnr_db = psnr_value(j.at("psnr_db"));
      e.outcome.hyperparameter = j.at("hyperparameter");
      e.outcome.iterations = j.at("iterations");
      offsets.push_back(j.at("offset"));
      cache.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  if (line_no == 0) bad("empty index");
  if (cache.entries.size() != count) {
    bad("header declares " + std::to_string(count) + " examples, index lists " +
        std::to_string(cache.entries.size()));
  }
  auto reader = ByteReader::from_file(adv_cache_blocks_path(stem));
  std::vector<float> blocks(count * cache.input_size);
  if (reader.remaining() != blocks.size() * 4) {
    reader.fail("block file holds " + std::to_string(reader.remaining()) + " bytes, index needs " +
                std::to_string(blocks.size() * 4));
  }
  reader.f32(blocks);
  if (payload_checksum(blocks) != checksum) reader.fail("block checksum mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    if (offsets[i] != i * cache.input_size) throw FormatError(index_path.string() + ": non-contiguous offsets");
    cache.entries[i].outcome.adversarial.assign(blocks.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                                                blocks.begin() + static_cast<std::ptrdiff_t>(offsets[i] + cache.input_size));
  }
  return cache;
}

}  // namespace rdfs::attack
