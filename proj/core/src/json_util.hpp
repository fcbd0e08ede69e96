#pragma once

// Strict JSON (de)serialization of the configuration structs shared by the
// dataset manifest and the run configuration file.

#include <array>
#include <set>
#include <type_traits>
#include <string>

#include "json.hpp"

#include "pgnn/diffusion.hpp"
#include "pgnn/errors.hpp"
#include "pgnn/field.hpp"
#include "pgnn/synth.hpp"

namespace pgnn::detail {

using nlohmann::json;

/// Reads fields out of one JSON object, rejecting keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(where_ + ": expected a JSON object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) out = as<T>(*v, path(key));
  }

  template <typename T>
  T require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw FormatError(path(key) + ": missing required key");
    return as<T>(*v, path(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw FormatError(path(it.key()) + ": unknown key");
    }
  }

  template <typename T>
  static T as(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw FormatError(where + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw FormatError(where + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<long long>() < 0) throw FormatError(where + ": expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw FormatError(where + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw FormatError(where + ": expected a string");
    }
    return v.get<T>();
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline json to_json(const GridSpec& g) { return {{"height", g.height}, {"width", g.width}}; }
inline json to_json(const Range& r) { return json::array({r.lo, r.hi}); }
inline json to_json(const IntRange& r) { return json::array({r.lo, r.hi}); }

inline json to_json(const ScenarioRanges& s) {
  return {{"diffusivity", to_json(s.diffusivity)},
          {"edge", to_json(s.edge)},
          {"initial_moisture", to_json(s.initial_moisture)},
          {"t_eval", to_json(s.t_eval)},
          {"modes", s.modes}};
}

inline json to_json(const NoiseSpec& n) {
  return {{"sigma_field", n.sigma_field},
          {"sigma_label", n.sigma_label},
          {"circle_count", to_json(n.circle_count)},
          {"circle_radius", to_json(n.circle_radius)}};
}

inline json to_json(const ColormapSpec& c) { return {{"low_rgb", c.low_rgb}, {"high_rgb", c.high_rgb}}; }

template <typename T, typename R>
R read_pair(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw FormatError(where + ": expected a two-element array [lo, hi]");
  return R{ObjectReader::as<T>(v[0], where + "[0]"), ObjectReader::as<T>(v[1], where + "[1]")};
}

inline void merge(const json& j, GridSpec& g, const std::string& where) {
  ObjectReader r(j, where);
  r.get("height", g.height);
  r.get("width", g.width);
  r.finish();
}

inline void merge(const json& j, ScenarioRanges& s, const std::string& where) {
  ObjectReader r(j, where);
  if (auto* v = r.find("diffusivity")) s.diffusivity = read_pair<double, Range>(*v, r.path("diffusivity"));
  if (auto* v = r.find("edge")) s.edge = read_pair<double, Range>(*v, r.path("edge"));
  if (auto* v = r.find("initial_moisture")) {
    s.initial_moisture = read_pair<double, Range>(*v, r.path("initial_moisture"));
  }
  if (auto* v = r.find("t_eval")) s.t_eval = read_pair<double, Range>(*v, r.path("t_eval"));
  r.get("modes", s.modes);
  r.finish();
}

inline void merge(const json& j, NoiseSpec& n, const std::string& where) {
  ObjectReader r(j, where);
  r.get("sigma_field", n.sigma_field);
  r.get("sigma_label", n.sigma_label);
  if (auto* v = r.find("circle_count")) n.circle_count = read_pair<int, IntRange>(*v, r.path("circle_count"));
  if (auto* v = r.find("circle_radius")) n.circle_radius = read_pair<int, IntRange>(*v, r.path("circle_radius"));
  r.finish();
}

inline std::array<int, 3> read_rgb(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw FormatError(where + ": expected an [r, g, b] array");
  return {ObjectReader::as<int>(v[0], where + "[0]"), ObjectReader::as<int>(v[1], where + "[1]"),
          ObjectReader::as<int>(v[2], where + "[2]")};
}

inline void merge(const json& j, ColormapSpec& c, const std::string& where) {
  ObjectReader r(j, where);
  if (auto* v = r.find("low_rgb")) c.low_rgb = read_rgb(*v, r.path("low_rgb"));
  if (auto* v = r.find("high_rgb")) c.high_rgb = read_rgb(*v, r.path("high_rgb"));
  r.finish();
}

/// Parses text, mapping syntax errors to FormatError.
inline json parse_json(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace pgnn::detail
