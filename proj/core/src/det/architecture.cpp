#include "rdfs/det/architecture.hpp"

#include <nlohmann/json.hpp>

#include <sstream>
#include <stdexcept>

namespace rdfs::det {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void reject(std::size_t layer, const std::string& what) {
  throw std::invalid_argument("architecture layer " + std::to_string(layer) + ": " + what);
}

}  // namespace

std::vector<ad::Shape> CnnArchitecture::layer_shapes() const {
  if (input_shape.empty()) throw std::invalid_argument("architecture: empty input shape");
  std::vector<ad::Shape> shapes;
  ad::Shape shape = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::visit(
        Overloaded{
            [&](const ConvSpec& c) {
              if (shape.size() != 3) reject(i, "conv needs a [C,H,W] input, got " + ad::shape_string(shape));
              if (c.out_channels == 0 || c.kernel == 0 || c.stride == 0) reject(i, "conv with zero extent");
              if (c.kernel > shape[1] + 2 * c.pad || c.kernel > shape[2] + 2 * c.pad)
                reject(i, "conv kernel larger than padded input " + ad::shape_string(shape));
              shape = {c.out_channels, (shape[1] + 2 * c.pad - c.kernel) / c.stride + 1,
                       (shape[2] + 2 * c.pad - c.kernel) / c.stride + 1};
            },
            [&](const BatchNormSpec&) {
              if (shape.size() != 3) reject(i, "batchnorm needs a [C,H,W] input");
            },
            [&](const ReluSpec&) {},
            [&](const MaxPoolSpec& p) {
              if (shape.size() != 3) reject(i, "maxpool needs a [C,H,W] input");
              if (p.window == 0 || p.stride == 0 || p.window > shape[1] || p.window > shape[2])
                reject(i, "maxpool window " + std::to_string(p.window) + " does not fit " + ad::shape_string(shape));
              shape = {shape[0], (shape[1] - p.window) / p.stride + 1, (shape[2] - p.window) / p.stride + 1};
            },
            [&](const FlattenSpec&) { shape = {ad::shape_size(shape)}; },
            [&](const DenseSpec& d) {
              if (shape.size() != 1) reject(i, "dense needs a flat input, got " + ad::shape_string(shape));
              if (d.out_features == 0) reject(i, "dense with zero outputs");
              shape = {d.out_features};
            },
        },
        layers[i]);
    shapes.push_back(shape);
  }
  return shapes;
}

void CnnArchitecture::validate() const {
  const auto shapes = layer_shapes();
  if (shapes.empty() || shapes.back().size() != 1) {
    throw std::invalid_argument("architecture '" + id + "': must end in a flat logits layer");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (const auto* c = std::get_if<ConvSpec>(&layers[i]); c && c->constrained) {
      if (i != 0) reject(i, "only the first layer may be constrained");
      if (c->kernel != 5) reject(i, "constrained layer needs 5x5 kernels");
    }
  }
  std::size_t flattens = 0;
  for (const auto& l : layers) flattens += std::holds_alternative<FlattenSpec>(l) ? 1 : 0;
  if (flattens > 1) throw std::invalid_argument("architecture '" + id + "': more than one flatten layer");
  if (flattens == 0 && input_shape.size() != 1)
    throw std::invalid_argument("architecture '" + id + "': image input without a flatten layer");
}

bool CnnArchitecture::constrained_first_layer() const {
  if (layers.empty()) return false;
  const auto* c = std::get_if<ConvSpec>(&layers.front());
  return c != nullptr && c->constrained;
}

std::size_t CnnArchitecture::head_begin() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (std::holds_alternative<FlattenSpec>(layers[i])) return i + 1;
  }
  return 0;
}

std::size_t CnnArchitecture::flatten_dim() const {
  const std::size_t begin = head_begin();
  if (begin == 0) return ad::shape_size(input_shape);
  return layer_shapes()[begin - 1][0];
}

std::vector<std::size_t> CnnArchitecture::head_hidden() const {
  std::vector<std::size_t> hidden;
  for (std::size_t i = head_begin(); i < layers.size(); ++i) {
    if (const auto* d = std::get_if<DenseSpec>(&layers[i])) hidden.push_back(d->out_features);
  }
  if (!hidden.empty()) hidden.pop_back();
  return hidden;
}

std::size_t CnnArchitecture::num_classes() const { return layer_shapes().back()[0]; }

std::size_t CnnArchitecture::patch_side() const {
  if (input_shape.size() != 3) throw std::logic_error("architecture '" + id + "' has no image input");
  return input_shape[1];
}

std::string CnnArchitecture::to_json() const {
  json layers_json = json::array();
  for (const auto& layer : layers) {
    layers_json.push_back(std::visit(
        Overloaded{
            [](const ConvSpec& c) {
              return json{{"type", "conv"},       {"out_channels", c.out_channels}, {"kernel", c.kernel},
                          {"stride", c.stride},   {"pad", c.pad},                   {"constrained", c.constrained}};
            },
            [](const BatchNormSpec&) { return json{{"type", "batchnorm"}}; },
            [](const ReluSpec&) { return json{{"type", "relu"}}; },
            [](const MaxPoolSpec& p) { return json{{"type", "maxpool"}, {"window", p.window}, {"stride", p.stride}}; },
            [](const FlattenSpec&) { return json{{"type", "flatten"}}; },
            [](const DenseSpec& d) { return json{{"type", "dense"}, {"out_features", d.out_features}}; },
        },
        layer));
  }
  return json{{"id", id}, {"input_shape", input_shape}, {"layers", layers_json}}.dump();
}

CnnArchitecture CnnArchitecture::from_json(const std::string& text) {
  const json j = json::parse(text);
  CnnArchitecture arch;
  arch.id = j.at("id").get<std::string>();
  arch.input_shape = j.at("input_shape").get<ad::Shape>();
  for (const auto& l : j.at("layers")) {
    const auto type = l.at("type").get<std::string>();
    if (type == "conv") {
      arch.layers.emplace_back(ConvSpec{l.at("out_channels"), l.at("kernel"), l.at("stride"), l.at("pad"),
                                        l.at("constrained")});
    } else if (type == "batchnorm") {
      arch.layers.emplace_back(BatchNormSpec{});
    } else if (type == "relu") {
      arch.layers.emplace_back(ReluSpec{});
    } else if (type == "maxpool") {
      arch.layers.emplace_back(MaxPoolSpec{l.at("window"), l.at("stride")});
    } else if (type == "flatten") {
      arch.layers.emplace_back(FlattenSpec{});
    } else if (type == "dense") {
      arch.layers.emplace_back(DenseSpec{l.at("out_features")});
    } else {
      throw std::invalid_argument("architecture: unknown layer type '" + type + "'");
    }
  }
  arch.validate();
  return arch;
}

namespace {

void append_conv_block(CnnArchitecture& arch, std::size_t channels, std::size_t kernel, std::size_t stride,
                       std::size_t pad) {
  arch.layers.emplace_back(ConvSpec{channels, kernel, stride, pad, false});
  arch.layers.emplace_back(BatchNormSpec{});
  arch.layers.emplace_back(ReluSpec{});
}

void append_head(CnnArchitecture& arch, const std::vector<std::size_t>& hidden, std::size_t classes) {
  for (std::size_t width : hidden) {
    arch.layers.emplace_back(DenseSpec{width});
    arch.layers.emplace_back(ReluSpec{});
  }
  arch.layers.emplace_back(DenseSpec{classes});
}

}  // namespace

CnnArchitecture bayar_style(Scale scale) {
  CnnArchitecture arch;
  arch.id = "bayar_style";
  const bool paper = scale == Scale::paper;
  const std::size_t side = paper ? 64 : 32;
  arch.input_shape = {1, side, side};
  arch.layers.emplace_back(ConvSpec{3, 5, 1, 2, true});
  append_conv_block(arch, paper ? 96 : 16, paper ? 7 : 5, 2, paper ? 3 : 2);
  arch.layers.emplace_back(MaxPoolSpec{2, 2});
  append_conv_block(arch, paper ? 64 : 16, paper ? 5 : 3, 1, paper ? 2 : 1);
  arch.layers.emplace_back(MaxPoolSpec{2, 2});
  append_conv_block(arch, paper ? 108 : 64, 1, 1, 0);
  arch.layers.emplace_back(MaxPoolSpec{2, 2});
  arch.layers.emplace_back(FlattenSpec{});
  append_head(arch, paper ? std::vector<std::size_t>{4096, 4096} : std::vector<std::size_t>{64, 64}, 2);
  arch.validate();
  return arch;
}

CnnArchitecture deep_net(Scale scale) {
  CnnArchitecture arch;
  arch.id = "deep";
  const bool paper = scale == Scale::paper;
  const std::size_t side = paper ? 64 : 32;
  arch.input_shape = {1, side, side};
  const std::vector<std::size_t> widths = paper ? std::vector<std::size_t>{32, 32, 32, 64, 64, 64, 64, 64, 50}
                                                : std::vector<std::size_t>{8, 8, 8, 16, 16, 16, 16, 16, 16};
  for (std::size_t i = 0; i < widths.size(); ++i) {
    append_conv_block(arch, widths[i], 3, (i % 3 == 2) ? 2 : 1, 1);
  }
  arch.layers.emplace_back(FlattenSpec{});
  append_head(arch, {250}, 2);
  arch.validate();
  return arch;
}

CnnArchitecture mlp(std::size_t inputs, const std::vector<std::size_t>& hidden, std::size_t classes) {
  CnnArchitecture arch;
  arch.id = "mlp";
  arch.input_shape = {inputs};
  append_head(arch, hidden, classes);
  arch.validate();
  return arch;
}

CnnArchitecture architecture_by_id(const std::string& id, Scale scale) {
  if (id == "bayar_style") return bayar_style(scale);
  if (id == "deep") return deep_net(scale);
  throw std::invalid_argument("unknown architecture id '" + id + "' (expected bayar_style or deep)");
}

}  // namespace rdfs::det
