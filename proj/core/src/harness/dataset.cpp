#include "rdfs/harness/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/container.hpp"
#include "rdfs/common/rng.hpp"
#include "rdfs/img/image_io.hpp"
#include "rdfs/img/manipulations.hpp"
#include "rdfs/img/texture.hpp"

namespace rdfs::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kPatchMagic = "RDFSPAT\x01";
constexpr Split kSplits[] = {Split::train, Split::val, Split::test};

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw FormatError("unknown split '" + name + "'");
}

struct Source {
  std::uint32_t id = 0;
  std::string name;
  fs::path file;  // empty for procedural sources
};

std::vector<Source> list_sources(const DatasetSettings& s, std::uint64_t seed) {
  std::vector<Source> out;
  if (s.source_dir.empty()) {
    for (std::size_t i = 0; i < s.procedural_sources; ++i)
      out.push_back({static_cast<std::uint32_t>(i), "texture-" + std::to_string(i), {}});
  } else {
    const fs::path dir(s.source_dir);
    if (!fs::is_directory(dir)) throw ConfigError("dataset.source_dir " + dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      auto ext = e.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i)
      out.push_back({static_cast<std::uint32_t>(i), files[i].filename().string(), files[i]});
  }
  SplitMix64 rng(derive_seed(seed, "source-split"));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

img::GrayImage load_source(const Source& src, const DatasetSettings& s, std::uint64_t seed) {
  if (src.file.empty())
    return img::generate_texture(s.procedural_side, s.procedural_side, derive_seed(seed, "texture", src.id));
  return img::read_image(src.file);
}

struct SplitBuild {
  std::vector<img::Patch> h0, h1;
};

}  // namespace

std::string split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

const img::PatchSet& Dataset::split(Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return test;
}

img::GrayImage manipulate(const img::GrayImage& image, Task task, const DatasetSettings& s) {
  switch (task) {
    case Task::resize: return img::resize_bilinear(image, s.resize_factor).quantized();
    case Task::median: return img::median_filter(image, s.median_window).quantized();
    case Task::clahe: return img::clahe(image, s.clahe).quantized();
  }
  return image;
}

Dataset prepare_dataset(const DatasetSettings& s, Task task, std::uint64_t seed) {
  const auto sources = list_sources(s, seed);
  const std::size_t per_source = s.max_per_image / 2;
  const std::size_t n = sources.size();
  const std::size_t n_train = static_cast<std::size_t>(static_cast<double>(n) * s.train_fraction);
  const std::size_t n_val = static_cast<std::size_t>(static_cast<double>(n) * s.val_fraction);
  const std::size_t bounds[] = {0, n_train, n_train + n_val, n};
  const std::size_t wanted[] = {s.train_per_class, s.val_per_class, s.test_per_class};

  // Coarse feasibility check before any image is touched.
  for (int k = 0; k < 3; ++k) {
    const std::size_t have = bounds[k + 1] - bounds[k];
    const std::size_t need = (wanted[k] + per_source - 1) / per_source;
    if (have < need) {
      throw ConfigError("dataset: split " + split_name(kSplits[k]) + " needs at least " + std::to_string(need) +
                        " source images for " + std::to_string(wanted[k]) + " patches per class at " +
                        std::to_string(per_source) + " per class per image, but has " + std::to_string(have) +
                        " of " + std::to_string(n));
    }
  }

  Dataset ds;
  ds.task = task;
  ds.seed = seed;
  std::size_t index = 0;
  for (int k = 0; k < 3; ++k) {
    SplitBuild b;
    for (std::size_t i = bounds[k]; i < bounds[k + 1] && b.h0.size() < wanted[k]; ++i) {
      const Source& src = sources[i];
      const img::GrayImage original = load_source(src, s, seed);
      if (original.width() < 2 * s.patch_side || original.height() < 2 * s.patch_side) continue;
      const img::GrayImage manipulated = manipulate(original, task, s);
      if (manipulated.width() < s.patch_side || manipulated.height() < s.patch_side) continue;
      const std::size_t take = std::min(per_source, wanted[k] - b.h0.size());
      const auto o0 = img::sample_patch_offsets(original.width(), original.height(), s.patch_side, take,
                                                derive_seed(seed, "h0-offsets", src.id));
      const auto o1 = img::sample_patch_offsets(manipulated.width(), manipulated.height(), s.patch_side, take,
                                                derive_seed(seed, "h1-offsets", src.id));
      const std::size_t m = std::min(o0.size(), o1.size());
      for (std::size_t j = 0; j < m; ++j) {
        b.h0.push_back({original.crop(o0[j].x, o0[j].y, s.patch_side, s.patch_side), img::Label::original, src.id,
                        o0[j]});
        b.h1.push_back({manipulated.crop(o1[j].x, o1[j].y, s.patch_side, s.patch_side), img::Label::manipulated,
                        src.id, o1[j]});
      }
    }
    if (b.h0.size() < wanted[k]) {
      throw ConfigError("dataset: split " + split_name(kSplits[k]) + " yielded " + std::to_string(b.h0.size()) +
                        " patches per class, " + std::to_string(wanted[k]) + " required; add source images");
    }
    img::PatchSet set;
    set.side = s.patch_side;
    for (auto* group : {&b.h0, &b.h1}) {
      for (auto& p : *group) {
        ManifestEntry e;
        e.index = index++;
        e.split = kSplits[k];
        e.label = p.label;
        e.source_id = p.source_id;
        e.offset = p.offset;
        for (const auto& src : sources) {
          if (src.id == p.source_id) e.source = src.name;
        }
        ds.manifest.push_back(std::move(e));
        set.patches.push_back(std::move(p));
      }
    }
    set.validate(s.max_per_image);
    (k == 0 ? ds.train : k == 1 ? ds.val : ds.test) = std::move(set);
  }
  check_split_hygiene(ds);
  return ds;
}

void check_split_hygiene(const Dataset& ds) {
  std::map<std::uint32_t, Split> owner;
  for (Split s : kSplits) {
    for (const auto& p : ds.split(s).patches) {
      const auto [it, inserted] = owner.emplace(p.source_id, s);
      if (!inserted && it->second != s) {
        throw std::logic_error("source " + std::to_string(p.source_id) + " appears in both " +
                               split_name(it->second) + " and " + split_name(s));
      }
    }
  }
}

std::string manifest_jsonl(const std::vector<ManifestEntry>& manifest) {
  std::string out;
  for (const auto& e : manifest) {
    out += json{{"index", e.index},
                {"split", split_name(e.split)},
                {"label", img::label_name(e.label)},
                {"source_id", e.source_id},
                {"source", e.source},
                {"x", e.offset.x},
                {"y", e.offset.y}}
               .dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  json meta{{"format_version", kContainerVersion}, {"task", task_name(ds.task)}, {"seed", ds.seed},
            {"patch_side", ds.train.side}};
  for (Split s : kSplits) {
    const auto& set = ds.split(s);
    Container c;
    c.payload.reserve(set.size() * set.side * set.side);
    for (const auto& p : set.patches) c.payload.insert(c.payload.end(), p.image.pixels().begin(), p.image.pixels().end());
    c.header = json{{"task", task_name(ds.task)}, {"split", split_name(s)}, {"side", set.side}, {"count", set.size()}}
                   .dump();
    write_container(dir / ("patches_" + split_name(s) + ".bin"), kPatchMagic, c);
    meta["counts"][split_name(s)] = set.size();
  }
  write_file_atomically(dir / "manifest.jsonl", manifest_jsonl(ds.manifest));
  write_file_atomically(dir / "meta.json", meta.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw std::runtime_error("cannot open " + meta_path.string());
  Dataset ds;
  std::size_t side = 0;
  try {
    const json meta = json::parse(meta_in);
    ds.task = parse_task(meta.at("task"));
    ds.seed = meta.at("seed");
    side = meta.at("patch_side");
  } catch (const json::exception& e) {
    throw FormatError(meta_path.string() + ": " + e.what());
  }

  const fs::path manifest_path = dir / "manifest.jsonl";
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.index = j.at("index");
      e.split = parse_split(j.at("split"));
      e.label = j.at("label").get<std::string>() == "H1" ? img::Label::manipulated : img::Label::original;
      e.source_id = j.at("source_id");
      e.source = j.at("source");
      e.offset = {j.at("x"), j.at("y")};
      if (e.index != ds.manifest.size()) throw FormatError("index out of sequence");
      ds.manifest.push_back(std::move(e));
    } catch (const std::exception& e) {
      throw FormatError(manifest_path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  std::size_t at = 0;
  for (Split s : kSplits) {
    const fs::path path = dir / ("patches_" + split_name(s) + ".bin");
    const Container c = read_container(path, kPatchMagic);
    std::size_t count = 0;
    try {
      const json h = json::parse(c.header);
      count = h.at("count");
      if (h.at("side").get<std::size_t>() != side) throw FormatError(path.string() + ": side mismatch");
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": malformed header: " + e.what());
    }
    const std::size_t area = side * side;
    if (c.payload.size() != count * area) throw FormatError(path.string() + ": payload size disagrees with count");
    img::PatchSet set;
    set.side = side;
    for (std::size_t i = 0; i < count; ++i, ++at) {
      if (at >= ds.manifest.size() || ds.manifest[at].split != s)
        throw FormatError(manifest_path.string() + ": manifest does not match " + path.string());
      const auto& e = ds.manifest[at];
      std::vector<float> px(c.payload.begin() + static_cast<std::ptrdiff_t>(i * area),
                            c.payload.begin() + static_cast<std::ptrdiff_t>((i + 1) * area));
      set.patches.push_back({img::GrayImage(side, side, std::move(px)), e.label, e.source_id, e.offset});
    }
    (s == Split::train ? ds.train : s == Split::val ? ds.val : ds.test) = std::move(set);
  }
  if (at != ds.manifest.size()) throw FormatError(manifest_path.string() + ": more entries than stored patches");
  return ds;
}

}  // namespace rdfs::harness
