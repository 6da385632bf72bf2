#pragma once

// Schema helpers shared by the JSON loaders. Type and presence mismatches
// become ParseError with the dotted field path in the message.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tmon/error.hpp"
#include "tmon/geometry.hpp"

namespace tmon::detail {

inline std::string join_path(std::string_view base, std::string_view key) {
  if (base.empty()) return std::string(key);
  return std::string(base) + "." + std::string(key);
}

inline std::string index_path(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

inline const nlohmann::json& require(const nlohmann::json& j, std::string_view key,
                                     std::string_view path) {
  if (!j.is_object()) throw ParseError(std::string(path.empty() ? "<root>" : path) + ": expected object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(join_path(path, key) + ": missing required field");
  return *it;
}

template <typename T>
T as(const nlohmann::json& v, std::string_view path) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string(path) + ": " + e.what());
  }
}

template <typename T>
T field(const nlohmann::json& j, std::string_view key, std::string_view path) {
  return as<T>(require(j, key, path), join_path(path, key));
}

template <typename T>
T field_or(const nlohmann::json& j, std::string_view key, std::string_view path, T fallback) {
  if (!j.is_object()) throw ParseError(std::string(path.empty() ? "<root>" : path) + ": expected object");
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return as<T>(*it, join_path(path, key));
}

inline Vec2 as_point(const nlohmann::json& v, std::string_view path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ParseError(std::string(path) + ": expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

inline Polygon as_polygon(const nlohmann::json& v, std::string_view path) {
  if (!v.is_array()) throw ParseError(std::string(path) + ": expected array of [x, y]");
  Polygon out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_point(v[i], index_path(path, i)));
  return out;
}

inline nlohmann::ordered_json point_json(Vec2 p) { return nlohmann::ordered_json::array({p.x, p.y}); }

inline nlohmann::ordered_json polygon_json(const Polygon& poly) {
  auto out = nlohmann::ordered_json::array();
  for (const Vec2& p : poly) out.push_back(point_json(p));
  return out;
}

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace tmon::detail
