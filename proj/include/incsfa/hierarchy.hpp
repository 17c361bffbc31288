#pragma once

// Converging layered network of IncSFA nodes over overlapping rectangular
// receptive fields, trained layer by layer from the bottom up.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "incsfa/binary_io.hpp"
#include "incsfa/error.hpp"
#include "incsfa/signal.hpp"
#include "incsfa/unit.hpp"
#include "incsfa/unit_io.hpp"

namespace incsfa {

/// Rectangle over the source grid of a layer (pixels for the first layer,
/// lower-layer nodes above it). Each grid cell carries `channels` values.
struct ReceptiveField {
  std::size_t x0 = 0, y0 = 0;
  std::size_t width = 1, height = 1;
  std::size_t channels = 1;

  std::size_t dim() const { return width * height * channels; }
};

struct NodeSpec {
  ReceptiveField field;
  UnitConfig unit;  ///< unit.input_dim must equal field.dim()
};

struct LayerSpec {
  std::size_t grid_cols = 1, grid_rows = 1;  ///< node grid, nodes stored row-major
  std::vector<NodeSpec> nodes;
  std::size_t epochs = 1;
};

struct HierarchySpec {
  std::size_t image_width = 1, image_height = 1, image_channels = 1;
  std::vector<LayerSpec> layers;
  bool converging = true;  ///< require a single node in the top layer
};

/// Field origins along one axis: stride = size - overlap, and when the fields
/// do not reach the far edge the last one is moved so that it ends there.
inline std::vector<std::size_t> tile_starts(std::size_t extent, std::size_t size, std::size_t overlap) {
  if (size == 0 || size > extent) throw ConfigError("tile: field size must lie in [1, " + std::to_string(extent) + "]");
  if (overlap >= size) throw ConfigError("tile: overlap must be smaller than the field size");
  const std::size_t stride = size - overlap;
  const std::size_t count = (extent - size) / stride + 1;
  std::vector<std::size_t> starts(count);
  for (std::size_t k = 0; k < count; ++k) starts[k] = k * stride;
  if ((extent - size) % stride != 0) starts.back() = extent - size;
  return starts;
}

/// A layer of w x h fields tiled over a src_cols x src_rows grid with the
/// given overlap. Node seeds are offset by the node index.
inline LayerSpec grid_layer(std::size_t src_cols, std::size_t src_rows, std::size_t channels, std::size_t field_w,
                            std::size_t field_h, std::size_t overlap_x, std::size_t overlap_y, const UnitConfig& unit) {
  const auto xs = tile_starts(src_cols, field_w, overlap_x);
  const auto ys = tile_starts(src_rows, field_h, overlap_y);
  LayerSpec layer;
  layer.grid_cols = xs.size();
  layer.grid_rows = ys.size();
  for (std::size_t r = 0; r < ys.size(); ++r)
    for (std::size_t c = 0; c < xs.size(); ++c) {
      NodeSpec node{{xs[c], ys[r], field_w, field_h, channels}, unit};
      node.unit.input_dim = node.field.dim();
      node.unit.seed = unit.seed + layer.nodes.size();
      layer.nodes.push_back(node);
    }
  return layer;
}

/// One node over the whole src grid.
inline LayerSpec single_node_layer(std::size_t src_cols, std::size_t src_rows, std::size_t channels, const UnitConfig& unit) {
  return grid_layer(src_cols, src_rows, channels, src_cols, src_rows, 0, 0, unit);
}

/// Checks geometry and dimensions. Throws ConfigError on the first problem.
inline void validate(const HierarchySpec& spec) {
  if (spec.layers.empty()) throw ConfigError("hierarchy: no layers");
  if (spec.image_width == 0 || spec.image_height == 0 || spec.image_channels == 0)
    throw ConfigError("hierarchy: empty image geometry");
  std::size_t cols = spec.image_width, rows = spec.image_height, channels = spec.image_channels;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerSpec& layer = spec.layers[l];
    const std::string where = "hierarchy layer " + std::to_string(l);
    if (layer.nodes.empty()) throw ConfigError(where + ": no nodes");
    if (layer.nodes.size() != layer.grid_cols * layer.grid_rows)
      throw ConfigError(where + ": node count does not match the " + std::to_string(layer.grid_rows) + " x " +
                        std::to_string(layer.grid_cols) + " grid");
    if (layer.epochs == 0) throw ConfigError(where + ": epochs must be positive");
    const std::size_t out_j = layer.nodes.front().unit.J;
    for (std::size_t n = 0; n < layer.nodes.size(); ++n) {
      const NodeSpec& node = layer.nodes[n];
      const ReceptiveField& f = node.field;
      const std::string who = where + " node " + std::to_string(n);
      if (f.width == 0 || f.height == 0) throw ConfigError(who + ": empty field");
      if (f.x0 + f.width > cols || f.y0 + f.height > rows)
        throw ConfigError(who + ": field out of bounds of the " + std::to_string(rows) + " x " + std::to_string(cols) + " source");
      if (f.channels != channels)
        throw ConfigError(who + ": field has " + std::to_string(f.channels) + " channels, source has " + std::to_string(channels));
      if (node.unit.input_dim != f.dim())
        throw ConfigError(who + ": unit input_dim " + std::to_string(node.unit.input_dim) + " != field dim " +
                          std::to_string(f.dim()));
      if (node.unit.J != out_j) throw ConfigError(where + ": all nodes of a layer need the same output count");
      node.unit.validate();
    }
    cols = layer.grid_cols;
    rows = layer.grid_rows;
    channels = out_j;
  }
  if (spec.converging && spec.layers.back().nodes.size() != 1) throw ConfigError("hierarchy: converging network needs one top node");
}

/// Geometry of the full-scale first two layers on 83 x 100 images: 10 x 10
/// fields overlapping by 5 pixels (15 x 19 nodes, 10 features each), then
/// 5 x 5 fields at stride 3 over that grid (4 x 5 nodes, 5 features each).
inline HierarchySpec full_scale_layout(std::size_t k1 = 20, std::size_t k2 = 20) {
  HierarchySpec spec;
  spec.image_width = 100;
  spec.image_height = 83;
  spec.converging = false;
  UnitConfig u1;
  u1.K = k1;
  u1.J = 10;
  u1.clip = true;
  spec.layers.push_back(grid_layer(100, 83, 1, 10, 10, 5, 5, u1));
  UnitConfig u2 = u1;
  u2.K = k2;
  u2.J = 5;
  spec.layers.push_back(grid_layer(spec.layers[0].grid_cols, spec.layers[0].grid_rows, 10, 5, 5, 2, 2, u2));
  return spec;
}

class Network {
 public:
  static constexpr std::string_view kMagic = "ISFN";
  static constexpr std::uint32_t kFormatVersion = 1;

  explicit Network(HierarchySpec spec) : spec_(std::move(spec)) {
    validate(spec_);
    std::size_t cols = spec_.image_width, channels = spec_.image_channels;
    for (const LayerSpec& layer : spec_.layers) {
      std::vector<IncSfaUnit> units;
      std::vector<std::vector<Eigen::Index>> gathers;
      for (const NodeSpec& node : layer.nodes) {
        units.emplace_back(node.unit);
        gathers.push_back(gather_indices(node.field, cols, channels));
      }
      units_.push_back(std::move(units));
      gather_.push_back(std::move(gathers));
      cols = layer.grid_cols;
      channels = layer.nodes.front().unit.J;
    }
  }

  const HierarchySpec& spec() const { return spec_; }
  std::size_t layer_count() const { return spec_.layers.size(); }
  std::size_t node_count(std::size_t layer) const { return units_.at(layer).size(); }
  /// Layers that have received training; all but the last of them are frozen.
  std::size_t trained_layers() const { return trained_; }
  std::size_t input_dim() const { return spec_.image_width * spec_.image_height * spec_.image_channels; }
  std::size_t layer_input_dim(std::size_t layer) const { return layer == 0 ? input_dim() : layer_output_dim(layer - 1); }
  std::size_t layer_output_dim(std::size_t layer) const {
    return units_.at(layer).size() * spec_.layers.at(layer).nodes.front().unit.J;
  }
  std::size_t output_dim() const { return layer_output_dim(layer_count() - 1); }

  const IncSfaUnit& unit(std::size_t layer, std::size_t node) const { return units_.at(layer).at(node); }

  /// Concatenated outputs of one layer (node-major) for that layer's input.
  Frame layer_infer(std::size_t layer, const Frame& input) const {
    check_dim(layer, input);
    const std::size_t j = spec_.layers[layer].nodes.front().unit.J;
    Frame out(static_cast<Eigen::Index>(layer_output_dim(layer)));
    for (std::size_t n = 0; n < units_[layer].size(); ++n)
      out.segment(static_cast<Eigen::Index>(n * j), static_cast<Eigen::Index>(j)) = units_[layer][n].infer(slice(layer, n, input));
    return out;
  }

  /// Feeds an image through layers [0, upto); upto = 0 returns the image.
  Frame forward(const Frame& image, std::size_t upto) const {
    if (upto > layer_count()) throw InvalidInput("forward: network has only " + std::to_string(layer_count()) + " layers");
    if (static_cast<std::size_t>(image.size()) != input_dim())
      throw InvalidInput("forward: image has " + std::to_string(image.size()) + " values, expected " + std::to_string(input_dim()));
    Frame x = image;
    for (std::size_t l = 0; l < upto; ++l) x = layer_infer(l, x);
    return x;
  }
  Frame forward(const Frame& image) const { return forward(image, layer_count()); }

  /// Trains one layer on a stream of images. Layers below are frozen and only
  /// transform the frames. Training a layer freezes every layer under it, so
  /// layers must be trained in order; the most recent layer may be trained
  /// again. Every node starts a new episode at each entry of episode_starts
  /// and at the start of every epoch. node_order fixes the node update order
  /// within a frame (default: ascending).
  void train_layer(std::size_t layer, std::span<const Frame> stream, std::size_t epochs,
                   std::span<const std::size_t> episode_starts = {}, std::span<const std::size_t> node_order = {}) {
    if (layer >= layer_count()) throw InvalidInput("train_layer: no layer " + std::to_string(layer));
    if (layer + 1 < trained_) throw ConfigError("train_layer: layer " + std::to_string(layer) + " is frozen");
    if (layer > trained_) throw ConfigError("train_layer: layer " + std::to_string(layer - 1) + " is not trained yet");
    if (stream.empty()) throw InvalidInput("train_layer: empty stream");
    std::vector<std::size_t> order(node_order.begin(), node_order.end());
    if (order.empty())
      for (std::size_t n = 0; n < node_count(layer); ++n) order.push_back(n);
    if (order.size() != node_count(layer)) throw InvalidInput("train_layer: node_order must list every node once");
    std::vector<bool> seen(node_count(layer), false);
    for (std::size_t n : order) {
      if (n >= seen.size() || seen[n]) throw InvalidInput("train_layer: node_order must list every node once");
      seen[n] = true;
    }

    std::vector<Frame> inputs;
    inputs.reserve(stream.size());
    for (const Frame& image : stream) inputs.push_back(forward(image, layer));
    trained_ = layer + 1;

    for (std::size_t e = 0; e < epochs; ++e) {
      std::size_t next_start = 0;
      for (std::size_t t = 0; t < inputs.size(); ++t) {
        bool boundary = t == 0;
        while (next_start < episode_starts.size() && episode_starts[next_start] <= t) {
          boundary = boundary || episode_starts[next_start] == t;
          ++next_start;
        }
        for (std::size_t n : order) {
          IncSfaUnit& u = units_[layer][n];
          if (boundary) u.begin_episode();
          u.update(slice(layer, n, inputs[t]));
        }
      }
    }
  }
  void train_layer(std::size_t layer, std::span<const Frame> stream) {
    train_layer(layer, stream, spec_.layers.at(layer).epochs);
  }

  /// Trains every layer bottom-up for its configured number of epochs.
  void train_all(std::span<const Frame> stream, std::span<const std::size_t> episode_starts = {}) {
    for (std::size_t l = 0; l < layer_count(); ++l) train_layer(l, stream, spec_.layers[l].epochs, episode_starts);
  }

  std::vector<std::uint8_t> save() const {
    ByteWriter w;
    w.raw(kMagic);
    w.u32(kFormatVersion);
    w.u64(layer_count());
    w.u64(trained_);
    for (const auto& layer : units_) {
      w.u64(layer.size());
      for (const IncSfaUnit& u : layer) {
        const auto blob = u.save();
        w.u64(blob.size());
        w.raw(std::string_view(reinterpret_cast<const char*>(blob.data()), blob.size()));
      }
    }
    return w.finish();
  }

  /// Restores unit state saved from a network built with the same spec.
  static Network load(HierarchySpec spec, std::span<const std::uint8_t> bytes) {
    Network net(std::move(spec));
    ByteReader r(bytes);
    if (r.raw(kMagic.size()) != kMagic) throw FormatError("network: bad magic");
    if (const auto v = r.u32(); v != kFormatVersion) throw FormatError("network: unsupported version " + std::to_string(v));
    if (r.u64() != net.layer_count()) throw FormatError("network: layer count differs from spec");
    const auto trained = r.u64();
    if (trained > net.layer_count()) throw FormatError("network: invalid trained-layer count");
    net.trained_ = static_cast<std::size_t>(trained);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      if (r.u64() != net.node_count(l)) throw FormatError("network: node count differs from spec in layer " + std::to_string(l));
      for (std::size_t n = 0; n < net.node_count(l); ++n) {
        const std::string blob = r.raw(static_cast<std::size_t>(r.u64()));
        IncSfaUnit u = IncSfaUnit::load(std::span(reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()));
        if (u.config().input_dim != net.units_[l][n].config().input_dim || u.output_dim() != net.units_[l][n].output_dim())
          throw FormatError("network: unit dims differ from spec in layer " + std::to_string(l));
        net.units_[l][n] = std::move(u);
      }
    }
    if (!r.at_end()) throw FormatError("network: trailing bytes");
    return net;
  }

 private:
  static std::vector<Eigen::Index> gather_indices(const ReceptiveField& f, std::size_t src_cols, std::size_t channels) {
    std::vector<Eigen::Index> idx;
    idx.reserve(f.dim());
    for (std::size_t r = f.y0; r < f.y0 + f.height; ++r)
      for (std::size_t c = f.x0; c < f.x0 + f.width; ++c)
        for (std::size_t ch = 0; ch < channels; ++ch) idx.push_back(static_cast<Eigen::Index>((r * src_cols + c) * channels + ch));
    return idx;
  }

  void check_dim(std::size_t layer, const Frame& input) const {
    if (layer >= layer_count()) throw InvalidInput("layer_infer: no layer " + std::to_string(layer));
    if (static_cast<std::size_t>(input.size()) != layer_input_dim(layer))
      throw InvalidInput("layer " + std::to_string(layer) + ": input has " + std::to_string(input.size()) + " values, expected " +
                         std::to_string(layer_input_dim(layer)));
  }

  Frame slice(std::size_t layer, std::size_t node, const Frame& input) const {
    const auto& idx = gather_[layer][node];
    Frame out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = input[idx[i]];
    return out;
  }

  HierarchySpec spec_;
  std::vector<std::vector<IncSfaUnit>> units_;
  std::vector<std::vector<std::vector<Eigen::Index>>> gather_;
  std::size_t trained_ = 0;
};

}  // namespace incsfa
