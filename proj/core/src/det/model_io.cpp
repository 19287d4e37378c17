#include "rdfs/det/model_io.hpp"

#include <nlohmann/json.hpp>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/container.hpp"

namespace rdfs::det {

namespace {

constexpr std::string_view kMagic = "RDFSCNN\x01";

std::vector<float> flat_state(const CnnDetector& detector) {
  const auto& net = detector.network();
  std::vector<float> out;
  for (const auto& p : net.parameters()) out.insert(out.end(), p.data().begin(), p.data().end());
  for (const auto& st : net.batchnorm_states()) {
    out.insert(out.end(), st.running_mean.begin(), st.running_mean.end());
    out.insert(out.end(), st.running_var.begin(), st.running_var.end());
  }
  return out;
}

}  // namespace

std::uint64_t model_fingerprint(const CnnDetector& detector) { return payload_checksum(flat_state(detector)); }

void save_model(const std::filesystem::path& path, const CnnDetector& detector) {
  const auto& net = detector.network();
  Container c;
  c.payload = flat_state(detector);
  const std::size_t param_values = net.parameter_count();
  const auto& meta = detector.metadata();
  nlohmann::json header{
      {"format_version", kContainerVersion},
      {"kind", "cnn"},
      {"architecture", nlohmann::json::parse(net.architecture().to_json())},
      {"task", meta.task},
      {"seed", meta.seed},
      {"N", detector.feature_dim()},
      {"epochs_run", meta.epochs_run},
      {"best_epoch", meta.best_epoch},
      {"best_val_accuracy", meta.best_val_accuracy},
      {"parameter_values", param_values},
      {"batchnorm_values", c.payload.size() - param_values},
      {"payload_fnv1a", payload_checksum(c.payload)},
  };
  c.header = header.dump();
  write_container(path, kMagic, c);
}

CnnDetector load_model(const std::filesystem::path& path) {
  auto c = read_container(path, kMagic);
  const std::string where = path.string() + ": ";
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(c.header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "header is not valid JSON: " + e.what());
  }
  try {
    if (header.at("kind").get<std::string>() != "cnn") throw FormatError(where + "not a CNN model container");
    Network<float> net(CnnArchitecture::from_json(header.at("architecture").dump()));
    if (header.at("N").get<std::size_t>() != net.architecture().flatten_dim())
      throw FormatError(where + "header N disagrees with the architecture");
    if (header.at("payload_fnv1a").get<std::uint64_t>() != payload_checksum(c.payload))
      throw FormatError(where + "payload checksum mismatch");
    std::size_t expected = net.parameter_count();
    for (const auto& st : net.batchnorm_states()) expected += 2 * st.running_mean.size();
    if (c.payload.size() != expected || header.at("parameter_values").get<std::size_t>() != net.parameter_count()) {
      throw FormatError(where + "payload holds " + std::to_string(c.payload.size()) + " values, architecture needs " +
                        std::to_string(expected));
    }
    std::size_t at = 0;
    for (auto& p : net.parameters()) {
      for (float& v : p.data()) v = c.payload[at++];
    }
    for (auto& st : net.batchnorm_states()) {
      for (float& v : st.running_mean) v = c.payload[at++];
      for (float& v : st.running_var) v = c.payload[at++];
    }
    TrainingMetadata meta{header.at("task"), header.at("seed"), header.at("epochs_run"), header.at("best_epoch"),
                          header.at("best_val_accuracy")};
    return CnnDetector(std::move(net), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + "invalid architecture: " + e.what());
  }
}

}  // namespace rdfs::det
