#pragma once

// Strict JSON object reading: unknown keys are rejected, missing keys keep
// their defaults.

#include <set>
#include <string>

#include <json.hpp>

#include "mospick/core/errors.hpp"
#include "mospick/core/geometry.hpp"

namespace mospick {

using json = nlohmann::json;

class ObjectReader {
public:
    ObjectReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object()) throw ConfigError(context_ + ": expected an object");
    }

    template <typename T>
    ObjectReader& field(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return *this;
        try {
            out = it->template get<T>();
        } catch (const ConfigError& e) {
            throw ConfigError(context_ + "." + key + ": " + e.what());
        } catch (const json::exception& e) {
            throw ConfigError(context_ + "." + key + ": " + e.what());
        }
        return *this;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.contains(it.key())) throw ConfigError(context_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

inline void to_json(json& j, const Vec2& v) { j = json::array({v.x, v.y}); }
inline void from_json(const json& j, Vec2& v) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("expected [x, y]");
    v = {j[0].get<double>(), j[1].get<double>()};
}
inline void to_json(json& j, const Vec3& v) { j = json::array({v.x, v.y, v.z}); }
inline void from_json(const json& j, Vec3& v) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected [x, y, z]");
    v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace mospick
