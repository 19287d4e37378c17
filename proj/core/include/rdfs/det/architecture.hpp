#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "rdfs/ad/tensor.hpp"

namespace rdfs::det {

struct ConvSpec {
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t pad = 0;
  /// High-pass constraint on the kernels (only valid on the first layer).
  bool constrained = false;
  bool operator==(const ConvSpec&) const = default;
};
struct BatchNormSpec {
  bool operator==(const BatchNormSpec&) const = default;
};
struct ReluSpec {
  bool operator==(const ReluSpec&) const = default;
};
struct MaxPoolSpec {
  std::size_t window = 2;
  std::size_t stride = 2;
  bool operator==(const MaxPoolSpec&) const = default;
};
/// Marks the deep-feature boundary: everything after it is the FC head.
struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};
struct DenseSpec {
  std::size_t out_features = 0;
  bool operator==(const DenseSpec&) const = default;
};

using LayerSpec = std::variant<ConvSpec, BatchNormSpec, ReluSpec, MaxPoolSpec, FlattenSpec, DenseSpec>;

enum class Scale { desk, paper };

struct CnnArchitecture {
  std::string id;
  /// Per-sample input shape: [C,H,W] for image nets, [D] for FC-only nets.
  ad::Shape input_shape;
  std::vector<LayerSpec> layers;

  bool operator==(const CnnArchitecture&) const = default;

  /// Throws std::invalid_argument when shapes do not chain or constraints are violated.
  void validate() const;
  /// Per-sample output shape of every layer.
  std::vector<ad::Shape> layer_shapes() const;

  bool constrained_first_layer() const;
  /// Length of the flatten-layer feature vector (N); input size if there is no flatten layer.
  std::size_t flatten_dim() const;
  /// Index of the first layer after the flatten boundary.
  std::size_t head_begin() const;
  /// Widths of the hidden dense layers in the head.
  std::vector<std::size_t> head_hidden() const;
  std::size_t num_classes() const;
  /// Patch side for image nets.
  std::size_t patch_side() const;

  std::string to_json() const;
  static CnnArchitecture from_json(const std::string& text);
};

/// Bayar-style constrained net: high-pass 5x5 first layer, three conv+BN
/// blocks each followed by max pooling, two hidden FC layers.
/// Paper scale: 64x64 input, N = 1728, head 4096-4096. Desk scale: 32x32, N = 256, head 64-64.
CnnArchitecture bayar_style(Scale scale);

/// Nine 3x3 conv+BN+ReLU layers, stride 2 on every third, one hidden FC layer
/// of 250 nodes. Paper scale: 64x64 input, N = 3200. Desk scale: 32x32, N = 256.
CnnArchitecture deep_net(Scale scale);

/// FC-only net over `inputs` features mirroring a head structure.
CnnArchitecture mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes = 2);

CnnArchitecture architecture_by_id(const std::string& id, Scale scale);

}  // namespace rdfs::det
