#include "rdfs/defence/reduced_detector.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

#include "rdfs/common/binary_io.hpp"
#include "rdfs/common/container.hpp"
#include "rdfs/common/rng.hpp"

namespace rdfs::defence {

namespace {

constexpr std::string_view kMagic = "RDFSRED\x01";

FeatureSet gather_set(const FeatureSet& set, const FeatureSubset& subset) {
  if (set.sample_shape != ad::Shape{subset.n}) {
    throw std::invalid_argument("reduced detector: features have shape " + ad::shape_string(set.sample_shape) +
                                ", expected [" + std::to_string(subset.n) + "]");
  }
  FeatureSet out;
  out.sample_shape = {subset.k};
  out.values = subset.gather(set.values, set.count());
  out.labels = set.labels;
  return out;
}

}  // namespace

std::string_view kind_name(ReducedKind kind) { return kind == ReducedKind::fc ? "fc" : "svm"; }

ReducedKind parse_kind(std::string_view name) {
  if (name == "fc" || name == "FC") return ReducedKind::fc;
  if (name == "svm" || name == "SVM") return ReducedKind::svm;
  throw std::invalid_argument("unknown detector kind '" + std::string(name) + "' (expected fc or svm)");
}

ReducedDetector ReducedDetector::from_fc(FeatureSubset subset, std::uint64_t fingerprint, det::Network<float> head) {
  subset.validate();
  if (head.architecture().input_shape != ad::Shape{subset.k} || head.architecture().num_classes() != 2)
    throw std::invalid_argument("reduced detector: FC head must map K inputs to 2 classes");
  ReducedDetector d;
  d.kind_ = ReducedKind::fc;
  d.subset_ = std::move(subset);
  d.fingerprint_ = fingerprint;
  head.set_trainable(false);
  d.fc_.emplace(std::move(head));
  return d;
}

ReducedDetector ReducedDetector::from_svm(FeatureSubset subset, std::uint64_t fingerprint, Standardizer standardizer,
                                          SvmModel model) {
  subset.validate();
  if (standardizer.dim() != subset.k || model.dim != subset.k)
    throw std::invalid_argument("reduced detector: SVM dimension must equal K");
  ReducedDetector d;
  d.kind_ = ReducedKind::svm;
  d.subset_ = std::move(subset);
  d.fingerprint_ = fingerprint;
  d.standardizer_ = std::move(standardizer);
  d.svm_.emplace(std::move(model));
  return d;
}

std::vector<ReducedDecision> ReducedDetector::predict_batch(std::span<const float> rows, std::size_t count) const {
  if (rows.size() != count * subset_.n) {
    throw std::invalid_argument("reduced detector: expected feature vectors of length " + std::to_string(subset_.n));
  }
  std::vector<ReducedDecision> out(count);
  if (count == 0) return out;
  const auto selected = subset_.gather(rows, count);
  if (kind_ == ReducedKind::fc) {
    const auto logits = det::infer_logits(*fc_, selected, count);
    for (std::size_t i = 0; i < count; ++i) {
      const float l0 = logits[2 * i], l1 = logits[2 * i + 1];
      out[i].score = static_cast<double>(l1) - l0;
      out[i].decision = l1 > l0 ? img::Label::manipulated : img::Label::original;
    }
  } else {
    const auto z = standardizer_.apply(selected, count);
    for (std::size_t i = 0; i < count; ++i) {
      out[i].score = svm_->decision(std::span<const float>(z).subspan(i * subset_.k, subset_.k));
      out[i].decision = out[i].score > 0 ? img::Label::manipulated : img::Label::original;
    }
  }
  return out;
}

ReducedDecision ReducedDetector::predict(std::span<const float> features) const {
  return predict_batch(features, 1).front();
}

ReducedDetector train_reduced_fc(const FeatureSet& train, const FeatureSet& val, SecretKey key,
                                 const FeatureSubset& subset, const std::vector<std::size_t>& hidden,
                                 const det::TrainConfig& cfg, det::TrainHistory* history) {
  subset.validate();
  if (!train.has_all_classes(2)) throw std::invalid_argument("train_reduced_fc: training data holds a single class");
  const auto tr = gather_set(train, subset);
  const auto va = gather_set(val, subset);
  det::Network<float> head(det::mlp(subset.k, hidden, 2));
  head.initialize(derive_seed(cfg.seed, "reduced-fc-init"));
  auto h = det::train_network(head, tr, va, cfg);
  if (history != nullptr) *history = std::move(h);
  return ReducedDetector::from_fc(subset, key_fingerprint(key), std::move(head));
}

ReducedDetector train_svm(const FeatureSet& train, SecretKey key, const FeatureSubset& subset, const SvmConfig& cfg,
                          SvmSelection* selection) {
  subset.validate();
  const auto tr = gather_set(train, subset);
  auto standardizer = Standardizer::fit(tr.values, tr.count(), subset.k);
  const auto z = standardizer.apply(tr.values, tr.count());
  auto sel = train_svm_cv(z, tr.count(), subset.k, tr.labels, cfg);
  auto model = sel.model;
  if (selection != nullptr) *selection = std::move(sel);
  return ReducedDetector::from_svm(subset, key_fingerprint(key), std::move(standardizer), std::move(model));
}

void save_reduced(const std::filesystem::path& path, const ReducedDetector& detector) {
  nlohmann::json header{
      {"format_version", kContainerVersion},
      {"kind", kind_name(detector.kind())},
      {"K", detector.subset().k},
      {"N", detector.subset().n},
      {"key_fingerprint", detector.key_fingerprint()},
  };
  Container c;
  if (const auto* head = detector.fc_head()) {
    header["hidden"] = head->architecture().head_hidden();
    for (const auto& p : head->parameters()) c.payload.insert(c.payload.end(), p.data().begin(), p.data().end());
  } else {
    const auto& m = *detector.svm();
    const auto& s = *detector.standardizer();
    header["standardization"] = {{"mean", s.mean}, {"inv_std", s.inv_std}};
    header["kernel"] = kernel_name(m.kernel);
    header["C"] = m.c;
    header["gamma"] = m.gamma;
    header["bias"] = m.bias;
    if (m.kernel == SvmKernel::linear) {
      c.payload = m.weights;
    } else {
      header["support_vectors"] = m.coefficients.size();
      c.payload = m.support_vectors;
      c.payload.insert(c.payload.end(), m.coefficients.begin(), m.coefficients.end());
    }
  }
  header["payload_fnv1a"] = payload_checksum(c.payload);
  c.header = header.dump();
  write_container(path, kMagic, c);
}

ReducedDetector load_reduced(const std::filesystem::path& path, SecretKey key) {
  const auto c = read_container(path, kMagic);
  const std::string where = path.string() + ": ";
  try {
    const auto header = nlohmann::json::parse(c.header);
    if (header.at("payload_fnv1a").get<std::uint64_t>() != payload_checksum(c.payload))
      throw FormatError(where + "payload checksum mismatch");
    const auto fingerprint = header.at("key_fingerprint").get<std::uint64_t>();
    if (fingerprint != key_fingerprint(key)) throw std::invalid_argument(where + "key does not match this detector");
    auto subset = select_features(key, header.at("N").get<std::size_t>(), header.at("K").get<std::size_t>());
    const std::size_t k = subset.k;
    const auto kind = parse_kind(header.at("kind").get<std::string>());
    if (kind == ReducedKind::fc) {
      det::Network<float> head(det::mlp(k, header.at("hidden").get<std::vector<std::size_t>>(), 2));
      if (c.payload.size() != head.parameter_count()) throw FormatError(where + "FC payload size mismatch");
      std::size_t at = 0;
      for (auto& p : head.parameters()) {
        for (float& v : p.data()) v = c.payload[at++];
      }
      return ReducedDetector::from_fc(std::move(subset), fingerprint, std::move(head));
    }
    Standardizer s;
    s.mean = header.at("standardization").at("mean").get<std::vector<float>>();
    s.inv_std = header.at("standardization").at("inv_std").get<std::vector<float>>();
    SvmModel m;
    m.kernel = parse_kernel(header.at("kernel").get<std::string>());
    m.dim = k;
    m.c = header.at("C");
    m.gamma = header.at("gamma");
    m.bias = header.at("bias");
    if (m.kernel == SvmKernel::linear) {
      if (c.payload.size() != k) throw FormatError(where + "linear SVM payload size mismatch");
      m.weights = c.payload;
    } else {
      const auto nsv = header.at("support_vectors").get<std::size_t>();
      if (c.payload.size() != nsv * (k + 1)) throw FormatError(where + "rbf SVM payload size mismatch");
      m.support_vectors.assign(c.payload.begin(), c.payload.begin() + static_cast<std::ptrdiff_t>(nsv * k));
      m.coefficients.assign(c.payload.begin() + static_cast<std::ptrdiff_t>(nsv * k), c.payload.end());
    }
    return ReducedDetector::from_svm(std::move(subset), fingerprint, std::move(s), std::move(m));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where + "malformed header: " + e.what());
  }
}

}  // namespace rdfs::defence
