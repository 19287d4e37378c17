#include "rdfs/harness/features.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/container.hpp"
#include "rdfs/common/rng.hpp"
#include "rdfs/det/model_io.hpp"

namespace rdfs::harness {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "RDFSFEA\x01";

defence::FeatureSet features_of(const det::CnnDetector& det, const img::PatchSet& set,
                                const std::vector<std::size_t>& indices) {
  std::vector<float> inputs;
  inputs.reserve(indices.size() * det.input_size());
  defence::FeatureSet out;
  out.sample_shape = {det.feature_dim()};
  for (std::size_t i : indices) {
    const auto px = det::to_model_units(set.patches[i].image);
    inputs.insert(inputs.end(), px.begin(), px.end());
    out.labels.push_back(static_cast<int>(set.patches[i].label));
  }
  out.values = det.features(inputs, indices.size());
  return out;
}

}  // namespace

std::vector<std::size_t> select_per_class(const img::PatchSet& set, std::size_t per_class, std::uint64_t seed) {
  std::vector<std::size_t> out;
  for (img::Label label : {img::Label::original, img::Label::manipulated}) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.patches[i].label == label) pool.push_back(i);
    }
    if (pool.size() < per_class) {
      throw ConfigError("need " + std::to_string(per_class) + " patches of class " +
                        std::string(img::label_name(label)) + ", only " + std::to_string(pool.size()) + " available");
    }
    SplitMix64 rng(derive_seed(seed, "per-class", static_cast<std::uint64_t>(label)));
    for (std::size_t i = 0; i < per_class; ++i) std::swap(pool[i], pool[i + rng.bounded(pool.size() - i)]);
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  std::sort(out.begin(), out.end());
  return out;
}

FeatureBank build_feature_bank(const det::CnnDetector& detector, const Dataset& ds, const RdfsSettings& settings,
                               std::uint64_t seed, const std::vector<attack::AdvCache>& caches) {
  FeatureBank bank;
  bank.task = task_name(ds.task);
  bank.model_fingerprint = det::model_fingerprint(detector);
  bank.n = detector.feature_dim();
  const std::size_t train_per_class = static_cast<std::size_t>(
      settings.train_fraction * static_cast<double>(ds.train.count(img::Label::original)) + 0.5);
  bank.train = features_of(detector, ds.train,
                           select_per_class(ds.train, train_per_class, derive_seed(seed, "rdfs-train-subset")));
  bank.val =
      features_of(detector, ds.val, select_per_class(ds.val, settings.val_per_class, derive_seed(seed, "rdfs-val")));
  bank.test = features_of(detector, ds.test,
                          select_per_class(ds.test, settings.test_per_class, derive_seed(seed, "rdfs-test")));
  for (const auto& cache : caches) {
    if (cache.model_fingerprint != bank.model_fingerprint)
      throw std::runtime_error("adversarial cache for " + cache.attack + " was crafted against a different model");
    std::vector<float> inputs;
    std::size_t count = 0;
    for (const auto& e : cache.entries) {
      if (!e.outcome.success) continue;
      inputs.insert(inputs.end(), e.outcome.adversarial.begin(), e.outcome.adversarial.end());
      ++count;
    }
    defence::FeatureSet fs;
    fs.sample_shape = {bank.n};
    fs.labels.assign(count, static_cast<int>(img::Label::manipulated));
    fs.values = detector.features(inputs, count);
    bank.adversarial[cache.attack] = std::move(fs);
  }
  return bank;
}

void save_feature_bank(const std::filesystem::path& path, const FeatureBank& bank) {
  Container c;
  json sections = json::array();
  auto add = [&](const std::string& name, const defence::FeatureSet& fs) {
    sections.push_back({{"name", name}, {"count", fs.count()}, {"labels", fs.labels}});
    c.payload.insert(c.payload.end(), fs.values.begin(), fs.values.end());
  };
  add("train", bank.train);
  add("val", bank.val);
  add("test", bank.test);
  for (const auto& [name, fs] : bank.adversarial) add("adv:" + name, fs);
  c.header = json{{"task", bank.task},
                  {"model_fingerprint", bank.model_fingerprint},
                  {"N", bank.n},
                  {"sections", sections},
                  {"payload_fnv1a", payload_checksum(c.payload)}}
                 .dump();
  write_container(path, kMagic, c);
}

FeatureBank load_feature_bank(const std::filesystem::path& path) {
  const Container c = read_container(path, kMagic);
  FeatureBank bank;
  try {
    const json h = json::parse(c.header);
    bank.task = h.at("task");
    bank.model_fingerprint = h.at("model_fingerprint");
    bank.n = h.at("N");
    if (h.at("payload_fnv1a").get<std::uint64_t>() != payload_checksum(c.payload))
      throw FormatError(path.string() + ": payload checksum mismatch");
    std::size_t at = 0;
    for (const auto& s : h.at("sections")) {
      defence::FeatureSet fs;
      fs.sample_shape = {bank.n};
      fs.labels = s.at("labels").get<std::vector<int>>();
      const std::size_t count = s.at("count");
      if (fs.labels.size() != count || at + count * bank.n > c.payload.size())
        throw FormatError(path.string() + ": section sizes disagree with the payload");
      fs.values.assign(c.payload.begin() + static_cast<std::ptrdiff_t>(at),
                       c.payload.begin() + static_cast<std::ptrdiff_t>(at + count * bank.n));
      at += count * bank.n;
      const std::string name = s.at("name");
      if (name == "train") bank.train = std::move(fs);
      else if (name == "val") bank.val = std::move(fs);
      else if (name == "test") bank.test = std::move(fs);
      else if (name.rfind("adv:", 0) == 0) bank.adversarial[name.substr(4)] = std::move(fs);
      else throw FormatError(path.string() + ": unknown section " + name);
    }
    if (at != c.payload.size()) throw FormatError(path.string() + ": trailing feature values");
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed header: " + e.what());
  }
  return bank;
}

}  // namespace rdfs::harness
