#pragma once

// Typed field access over nlohmann::json that reports failures with a field path.

#include <string>
#include <string_view>

#include "json.hpp"
#include "sv6d/error.h"

namespace sv6d::detail {

inline std::string join_path(const std::string& base, std::string_view key) {
  if (base.empty()) return std::string(key);
  return base + "." + std::string(key);
}

inline std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

class JsonReader {
 public:
  explicit JsonReader(ErrorKind kind) : kind_(kind) {}

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw Error(kind_, (path.empty() ? std::string("document") : path) + ": " + what, path);
  }

  const nlohmann::json& object(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_object()) fail(path, "expected an object");
    return j;
  }

  const nlohmann::json& array(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
  }

  const nlohmann::json& field(const nlohmann::json& obj, std::string_view key,
                              const std::string& path) const {
    object(obj, path);
    auto it = obj.find(key);
    if (it == obj.end()) fail(join_path(path, key), "missing required field");
    return *it;
  }

  const nlohmann::json* optional_field(const nlohmann::json& obj, std::string_view key) const {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string string(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  double number(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  bool boolean(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
  }

  std::uint64_t unsigned_integer(const nlohmann::json& j, const std::string& path) const {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
      fail(path, "expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
  }

  std::string string_field(const nlohmann::json& obj, std::string_view key,
                           const std::string& path) const {
    return string(field(obj, key, path), join_path(path, key));
  }

  double number_field(const nlohmann::json& obj, std::string_view key,
                      const std::string& path) const {
    return number(field(obj, key, path), join_path(path, key));
  }

 private:
  ErrorKind kind_;
};

inline nlohmann::json parse_json_text(std::string_view text, ErrorKind kind) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(kind, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace sv6d::detail
