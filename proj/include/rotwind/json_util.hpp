#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "rotwind/errors.hpp"

namespace rotwind::jsonu {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
inline std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

inline void require_object(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
}

inline void check_keys(const nlohmann::json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(join(path, it.key()), "unknown key");
  }
}

inline const nlohmann::json& field(const nlohmann::json& j, const std::string& path,
                                   const char* key) {
  require_object(j, path);
  if (!j.contains(key)) throw ConfigError(join(path, key), "missing required field");
  return j.at(key);
}

inline double number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline long long integer(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

inline double number_or(const nlohmann::json& j, const std::string& path, const char* key,
                        double fallback) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), join(path, key));
}

inline long long integer_or(const nlohmann::json& j, const std::string& path, const char* key,
                            long long fallback) {
  if (!j.contains(key)) return fallback;
  return integer(j.at(key), join(path, key));
}

inline const nlohmann::json& array(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  return j;
}

}  // namespace rotwind::jsonu
