#pragma once

// JSON schema for problem instances:
//
//   {
//     "points": [[x, y], ...],   // n >= 3 monopole points, convex position
//     "b":      [b_1, ..., b_n], // boundary values at the points
//     "A":      number,          // ALF constant, >= 0 (optional, default 0)
//     "seed":   integer          // optional, default 0
//   }
//
// Any other key is rejected.

#include "maslag/error.hpp"
#include "maslag/gh_geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

namespace maslag {

struct ConfigDocument {
    MonopoleConfig config;
    std::uint64_t seed = 0;
};

inline ConfigDocument parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key != "points" && key != "b" && key != "A" && key != "seed")
            throw ConfigError("unknown config key '" + key + "'");
    }
    if (!j.contains("points") || !j.contains("b")) throw ConfigError("config requires 'points' and 'b'");
    ConfigDocument doc;
    const auto& pts = j.at("points");
    if (!pts.is_array()) throw ConfigError("'points' must be an array");
    for (const auto& p : pts) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw ConfigError("each point must be [x, y]");
        doc.config.points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    const auto& b = j.at("b");
    if (!b.is_array()) throw ConfigError("'b' must be an array");
    for (const auto& v : b) {
        if (!v.is_number()) throw ConfigError("'b' entries must be numbers");
        doc.config.boundary_values.push_back(v.get<double>());
    }
    if (j.contains("A")) {
        if (!j.at("A").is_number()) throw ConfigError("'A' must be a number");
        doc.config.alf_constant = j.at("A").get<double>();
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
        doc.seed = j.at("seed").get<std::uint64_t>();
    }
    return doc;
}

inline ConfigDocument parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ConfigDocument load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline nlohmann::json to_json(const MonopoleConfig& cfg) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : cfg.points) pts.push_back({p.x(), p.y()});
    return {{"points", pts}, {"b", cfg.boundary_values}, {"A", cfg.alf_constant}};
}

inline MonopoleConfig to_config(const Problem& pb) {
    return {pb.points(), pb.boundary_values(), pb.alf_constant()};
}

/// FNV-1a, used for config hashes and artifact checksums.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

inline std::string config_hash(const MonopoleConfig& cfg) { return hex64(fnv1a(to_json(cfg).dump())); }

} // namespace maslag
