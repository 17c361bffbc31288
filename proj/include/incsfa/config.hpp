#pragma once

// JSON form of unit and hierarchy configurations, strict key checking and the
// config hash embedded in every artifact.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

#include "incsfa/ccipca.hpp"
#include "incsfa/error.hpp"
#include "incsfa/hierarchy.hpp"
#include "incsfa/mca.hpp"
#include "incsfa/unit.hpp"

namespace incsfa {

using Json = nlohmann::json;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical (key-sorted, compact) dump.
inline std::uint64_t config_hash(const Json& j) { return fnv1a64(j.dump()); }

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

namespace detail {
inline void require_object(const Json& j, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
}

/// Rejects keys of `given` that do not occur in `allowed` (recursively for objects).
inline void check_keys(const Json& given, const Json& allowed, const std::string& path) {
  if (!given.is_object() || !allowed.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    if (!allowed.contains(key)) throw ConfigError("config: unknown key '" + path + key + "'");
    const Json& ref = allowed.at(key);
    if (ref.is_object() && !ref.empty()) check_keys(value, ref, path + key + ".");
  }
}

template <typename T>
T get(const Json& j, const char* key, std::string_view what) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(what) + "." + key + ": " + e.what());
  }
}
}  // namespace detail

inline Json to_json(const AmnesicSchedule& s) { return {{"t1", s.t1}, {"t2", s.t2}, {"c", s.c}, {"r", s.r}}; }

inline AmnesicSchedule amnesic_from_json(const Json& j) {
  detail::require_object(j, "schedule");
  detail::check_keys(j, to_json(AmnesicSchedule{}), "schedule.");
  AmnesicSchedule s;
  if (j.contains("t1")) s.t1 = detail::get<std::int64_t>(j, "t1", "schedule");
  if (j.contains("t2")) s.t2 = detail::get<std::int64_t>(j, "t2", "schedule");
  if (j.contains("c")) s.c = detail::get<double>(j, "c", "schedule");
  if (j.contains("r")) s.r = detail::get<double>(j, "r", "schedule");
  s.validate();
  return s;
}

inline Json to_json(const McaRateSchedule& s) { return {{"eta_l", s.eta_l}, {"eta_h", s.eta_h}, {"T", s.T}}; }

inline McaRateSchedule mca_from_json(const Json& j) {
  detail::require_object(j, "mca");
  detail::check_keys(j, to_json(McaRateSchedule{}), "mca.");
  McaRateSchedule s;
  if (j.contains("eta_h")) s.eta_h = detail::get<double>(j, "eta_h", "mca");
  s.eta_l = j.contains("eta_l") ? detail::get<double>(j, "eta_l", "mca") : s.eta_h;
  if (j.contains("T")) s.T = detail::get<std::uint64_t>(j, "T", "mca");
  s.validate();
  return s;
}

inline Json to_json(const UnitConfig& c) {
  return {{"input_dim", c.input_dim},
          {"expand", c.expand},
          {"normalize_variance", c.normalize_variance},
          {"K", c.K},
          {"J", c.J},
          {"ccipca_schedule", to_json(c.ccipca_schedule)},
          {"mean_schedule", c.mean_schedule ? to_json(*c.mean_schedule) : Json(nullptr)},
          {"mca", to_json(c.mca)},
          {"normalize_features", c.normalize_features},
          {"mca_init", c.mca_init == McaInit::random ? "random" : "derivative"},
          {"clip", c.clip},
          {"clip_lo", c.clip_lo},
          {"clip_hi", c.clip_hi},
          {"gamma_eps_rel", c.gamma_eps_rel},
          {"gamma_eps_abs", c.gamma_eps_abs},
          {"reduce_beta", c.reduce_beta},
          {"reduce_interval", c.reduce_interval},
          {"adapt_eta", c.adapt_eta},
          {"adapt_start", c.adapt_start},
          {"slowness_period", c.slowness_period},
          {"seed", c.seed}};
}

/// Missing keys keep the values of `base`. Unknown keys are errors.
inline UnitConfig unit_from_json(const Json& j, UnitConfig base = {}) {
  detail::require_object(j, "unit");
  Json allowed = to_json(UnitConfig{});
  allowed["mean_schedule"] = to_json(AmnesicSchedule{});
  detail::check_keys(j, allowed, "unit.");
  UnitConfig c = std::move(base);
  constexpr std::string_view w = "unit";
  if (j.contains("input_dim")) c.input_dim = detail::get<std::size_t>(j, "input_dim", w);
  if (j.contains("expand")) c.expand = detail::get<bool>(j, "expand", w);
  if (j.contains("normalize_variance")) c.normalize_variance = detail::get<bool>(j, "normalize_variance", w);
  if (j.contains("K")) c.K = detail::get<std::size_t>(j, "K", w);
  if (j.contains("J")) c.J = detail::get<std::size_t>(j, "J", w);
  if (j.contains("ccipca_schedule")) c.ccipca_schedule = amnesic_from_json(j.at("ccipca_schedule"));
  if (j.contains("mean_schedule")) {
    if (j.at("mean_schedule").is_null())
      c.mean_schedule.reset();
    else
      c.mean_schedule = amnesic_from_json(j.at("mean_schedule"));
  }
  if (j.contains("mca")) c.mca = mca_from_json(j.at("mca"));
  if (j.contains("normalize_features")) c.normalize_features = detail::get<bool>(j, "normalize_features", w);
  if (j.contains("mca_init")) {
    const auto s = detail::get<std::string>(j, "mca_init", w);
    if (s == "derivative")
      c.mca_init = McaInit::derivative;
    else if (s == "random")
      c.mca_init = McaInit::random;
    else
      throw ConfigError("unit.mca_init: expected 'derivative' or 'random', got '" + s + "'");
  }
  if (j.contains("clip")) c.clip = detail::get<bool>(j, "clip", w);
  if (j.contains("clip_lo")) c.clip_lo = detail::get<double>(j, "clip_lo", w);
  if (j.contains("clip_hi")) c.clip_hi = detail::get<double>(j, "clip_hi", w);
  if (j.contains("gamma_eps_rel")) c.gamma_eps_rel = detail::get<double>(j, "gamma_eps_rel", w);
  if (j.contains("gamma_eps_abs")) c.gamma_eps_abs = detail::get<double>(j, "gamma_eps_abs", w);
  if (j.contains("reduce_beta")) c.reduce_beta = detail::get<double>(j, "reduce_beta", w);
  if (j.contains("reduce_interval")) c.reduce_interval = detail::get<std::uint64_t>(j, "reduce_interval", w);
  if (j.contains("adapt_eta")) c.adapt_eta = detail::get<bool>(j, "adapt_eta", w);
  if (j.contains("adapt_start")) c.adapt_start = detail::get<std::uint64_t>(j, "adapt_start", w);
  if (j.contains("slowness_period")) c.slowness_period = detail::get<double>(j, "slowness_period", w);
  if (j.contains("seed")) c.seed = detail::get<std::uint64_t>(j, "seed", w);
  return c;
}

/// Layer description used in configuration files:
///   {"field": [w, h], "overlap": [ox, oy], "epochs": n, "unit": {...}}
/// or {"single": true, "epochs": n, "unit": {...}} for one node over the whole grid.
/// input_dim is derived from the field.
inline HierarchySpec hierarchy_from_json(const Json& j) {
  detail::require_object(j, "hierarchy");
  detail::check_keys(j, Json{{"image", 0}, {"layers", 0}, {"converging", 0}}, "hierarchy.");
  HierarchySpec spec;
  const auto image = detail::get<std::vector<std::size_t>>(j, "image", "hierarchy");
  if (image.size() < 2 || image.size() > 3) throw ConfigError("hierarchy.image: expected [width, height] or [width, height, channels]");
  spec.image_width = image[0];
  spec.image_height = image[1];
  spec.image_channels = image.size() == 3 ? image[2] : 1;
  if (j.contains("converging")) spec.converging = detail::get<bool>(j, "converging", "hierarchy");
  if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty())
    throw ConfigError("hierarchy.layers: expected a non-empty array");
  std::size_t cols = spec.image_width, rows = spec.image_height, channels = spec.image_channels;
  for (const Json& lj : j.at("layers")) {
    detail::require_object(lj, "hierarchy layer");
    detail::check_keys(lj, Json{{"field", 0}, {"overlap", 0}, {"single", 0}, {"epochs", 0}, {"unit", 0}}, "layer.");
    const UnitConfig unit = lj.contains("unit") ? unit_from_json(lj.at("unit")) : UnitConfig{};
    LayerSpec layer;
    if (lj.value("single", false)) {
      layer = single_node_layer(cols, rows, channels, unit);
    } else {
      const auto field = detail::get<std::vector<std::size_t>>(lj, "field", "layer");
      const auto overlap = lj.contains("overlap") ? detail::get<std::vector<std::size_t>>(lj, "overlap", "layer")
                                                  : std::vector<std::size_t>{0, 0};
      if (field.size() != 2 || overlap.size() != 2) throw ConfigError("layer: field and overlap need two entries");
      layer = grid_layer(cols, rows, channels, field[0], field[1], overlap[0], overlap[1], unit);
    }
    if (lj.contains("epochs")) layer.epochs = detail::get<std::size_t>(lj, "epochs", "layer");
    cols = layer.grid_cols;
    rows = layer.grid_rows;
    channels = unit.J;
    spec.layers.push_back(std::move(layer));
  }
  validate(spec);
  return spec;
}

/// Applies `overrides` on top of `defaults` (RFC 7386 merge patch) after
/// checking that every override key exists in the defaults.
inline Json merge_config(const Json& defaults, const Json& overrides) {
  if (overrides.is_null()) return defaults;
  detail::require_object(overrides, "config");
  detail::check_keys(overrides, defaults, "");
  Json merged = defaults;
  merged.merge_patch(overrides);
  return merged;
}

}  // namespace incsfa
