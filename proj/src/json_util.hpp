// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kvpilot/error.hpp"

namespace kvpilot::detail {

using Json = nlohmann::ordered_json;

inline Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
        std::string what = e.what();
        if (auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
        throw ParseError(what, at);
    }
}

/// Reads one JSON object, remembering which keys were consumed so finish()
/// can reject the rest.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const Json* raw(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (const Json* v = raw(key)) out = convert<T>(*v, field(key));
    }

    template <class T>
    T require(const std::string& key) {
        const Json* v = raw(key);
        if (!v) throw ConfigError("missing", field(key));
        return convert<T>(*v, field(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError("unknown key", field(it.key()));
        }
    }

    template <class T>
    static T convert(const Json& v, const std::string& f);

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class T>
struct Conv;

template <>
struct Conv<double> {
    static double get(const Json& v, const std::string& f) {
        if (!v.is_number()) throw ConfigError("expected a number", f);
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError("expected a finite number", f);
        return d;
    }
};
template <>
struct Conv<bool> {
    static bool get(const Json& v, const std::string& f) {
        if (!v.is_boolean()) throw ConfigError("expected true or false", f);
        return v.get<bool>();
    }
};
template <>
struct Conv<std::string> {
    static std::string get(const Json& v, const std::string& f) {
        if (!v.is_string()) throw ConfigError("expected a string", f);
        return v.get<std::string>();
    }
};
template <>
struct Conv<int> {
    static int get(const Json& v, const std::string& f) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer", f);
        const auto x = v.get<std::int64_t>();
        if (x < -(1LL << 31) || x >= (1LL << 31)) throw ConfigError("out of range", f);
        return static_cast<int>(x);
    }
};
template <>
struct Conv<std::uint64_t> {
    static std::uint64_t get(const Json& v, const std::string& f) {
        if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer", f);
        return v.get<std::uint64_t>();
    }
};
template <class T>
struct Conv<std::vector<T>> {
    static std::vector<T> get(const Json& v, const std::string& f) {
        if (!v.is_array()) throw ConfigError("expected an array", f);
        std::vector<T> out;
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Conv<T>::get(v[i], f + "[" + std::to_string(i) + "]"));
        return out;
    }
};
template <class A, class B>
struct Conv<std::pair<A, B>> {
    static std::pair<A, B> get(const Json& v, const std::string& f) {
        if (!v.is_array() || v.size() != 2) throw ConfigError("expected a pair", f);
        return {Conv<A>::get(v[0], f + "[0]"), Conv<B>::get(v[1], f + "[1]")};
    }
};

template <class T>
T Reader::convert(const Json& v, const std::string& f) {
    return Conv<T>::get(v, f);
}

}  // namespace kvpilot::detail
