#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "uaic/errors.hpp"

namespace uaic::jsonutil {

/// Overwrites `out` when `key` is present; absent keys keep the default.
template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& what) {
    if (!j.is_object()) {
        throw DataError(what + ": expected a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) == keys.end()) {
            throw DataError(what + ": unknown key '" + key + "'");
        }
    }
}

} // namespace uaic::jsonutil
