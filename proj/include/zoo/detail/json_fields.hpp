#pragma once

// Path-tracking accessors over nlohmann::json used by the JSON readers.

#include "zoo/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace zoo::detail {

inline std::string join_path(const std::string& base, std::string_view key) {
    return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

template <typename Json>
const Json& require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path, "expected an object");
    return j;
}

template <typename Json>
const Json& field(const Json& obj, std::string_view key, const std::string& path) {
    require_object(obj, path);
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(join_path(path, key), "missing field");
    return *it;
}

template <typename Json>
std::string get_string(const Json& obj, std::string_view key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_string()) throw ParseError(join_path(path, key), "expected a string");
    return v.template get<std::string>();
}

template <typename Json>
std::int64_t as_int(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
    return v.template get<std::int64_t>();
}

template <typename Json>
std::int64_t get_int(const Json& obj, std::string_view key, const std::string& path) {
    return as_int(field(obj, key, path), join_path(path, key));
}

template <typename Json>
bool get_bool(const Json& obj, std::string_view key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_boolean()) throw ParseError(join_path(path, key), "expected a boolean");
    return v.template get<bool>();
}

template <typename Json>
double get_number(const Json& obj, std::string_view key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_number()) throw ParseError(join_path(path, key), "expected a number");
    return v.template get<double>();
}

template <typename Json>
const Json& get_array(const Json& obj, std::string_view key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_array()) throw ParseError(join_path(path, key), "expected an array");
    return v;
}

/// Rejects keys outside `allowed`.
template <typename Json>
void reject_unknown(const Json& obj, const std::set<std::string, std::less<>>& allowed, const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.contains(it.key())) throw ParseError(join_path(path, it.key()), "unknown field");
    }
}

}  // namespace zoo::detail
