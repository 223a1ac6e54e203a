#pragma once

// Shared fixtures for the unit tests.

#include <cstdint>
#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "radarpc/geometry.hpp"
#include "radarpc/grid.hpp"
#include "radarpc/util.hpp"

namespace radarpc::test {

/// Coarse geometry that keeps network and CFAR tests fast.
inline CellGeometry small_geometry() {
    CellGeometry g;
    g.range_bins = 32;
    g.azimuth_bins = 16;
    g.elevation_bins = 8;
    g.doppler_bins = 16;
    g.range = {1.0, 25.0};
    return g;
}

inline CellGeometry tiny_geometry(std::size_t r = 4, std::size_t a = 4, std::size_t e = 4, std::size_t d = 4) {
    CellGeometry g;
    g.range_bins = r;
    g.azimuth_bins = a;
    g.elevation_bins = e;
    g.doppler_bins = d;
    g.range = {1.0, 9.0};
    return g;
}

inline OccupancyGrid random_grid(const CellGeometry& g, Rng& rng, double density) {
    OccupancyGrid grid(g);
    for (auto& v : grid.occupancy) v = rng.bernoulli(density);
    return grid;
}

inline PointCloud random_cloud(std::size_t n, Rng& rng, double scale = 10.0) {
    PointCloud c(4);
    for (std::size_t i = 0; i < n; ++i)
        c.push({static_cast<float>(rng.uniform(-scale, scale)), static_cast<float>(rng.uniform(-scale, scale)),
                static_cast<float>(rng.uniform(-scale, scale)), 1.0f});
    return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::path(RADARPC_TEST_TMP) / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Minimal XML well-formedness check: one root, balanced tags, quoted
/// attributes, known entities. Returns an empty string when well formed.
inline std::string xml_problem(const std::string& s) {
    std::vector<std::string> stack;
    std::size_t i = 0, roots = 0;
    auto name_at = [&](std::size_t& k) {
        const std::size_t b = k;
        while (k < s.size() && (std::isalnum(static_cast<unsigned char>(s[k])) || s[k] == '-' || s[k] == ':' || s[k] == '_'))
            ++k;
        return s.substr(b, k - b);
    };
    auto check_text = [&](std::size_t b, std::size_t e) -> std::string {
        for (std::size_t k = b; k < e; ++k) {
            if (s[k] == '>') return "stray '>' at " + std::to_string(k);
            if (s[k] != '&') continue;
            const std::size_t semi = s.find(';', k);
            if (semi == std::string::npos || semi > e) return "unterminated entity at " + std::to_string(k);
            const std::string ent = s.substr(k + 1, semi - k - 1);
            if (ent != "amp" && ent != "lt" && ent != "gt" && ent != "quot" && ent != "apos")
                return "unknown entity &" + ent + ";";
        }
        return "";
    };
    while (i < s.size()) {
        const std::size_t lt = s.find('<', i);
        const std::size_t stop = lt == std::string::npos ? s.size() : lt;
        if (auto p = check_text(i, stop); !p.empty()) return p;
        if (stack.empty())
            for (std::size_t k = i; k < stop; ++k)
                if (!std::isspace(static_cast<unsigned char>(s[k]))) return "text outside root";
        if (lt == std::string::npos) break;
        if (s.compare(lt, 5, "<?xml") == 0) {
            if (lt != 0) return "declaration not at start";
            const std::size_t e = s.find("?>", lt);
            if (e == std::string::npos) return "unterminated declaration";
            i = e + 2;
            continue;
        }
        std::size_t k = lt + 1;
        const bool closing = k < s.size() && s[k] == '/';
        if (closing) ++k;
        const std::string name = name_at(k);
        if (name.empty()) return "empty tag name at " + std::to_string(lt);
        if (closing) {
            if (stack.empty() || stack.back() != name) return "mismatched </" + name + ">";
            stack.pop_back();
            if (k >= s.size() || s[k] != '>') return "malformed closing tag " + name;
            i = k + 1;
            continue;
        }
        std::vector<std::string> attrs;
        while (true) {
            while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
            if (k >= s.size()) return "unterminated tag " + name;
            if (s[k] == '>' || s.compare(k, 2, "/>") == 0) break;
            const std::string attr = name_at(k);
            if (attr.empty() || k >= s.size() || s[k] != '=' || k + 1 >= s.size() || s[k + 1] != '"')
                return "malformed attribute in <" + name + ">";
            for (const auto& a : attrs)
                if (a == attr) return "duplicate attribute " + attr;
            attrs.push_back(attr);
            const std::size_t close = s.find('"', k + 2);
            if (close == std::string::npos) return "unterminated attribute value";
            if (s.substr(k + 2, close - k - 2).find('<') != std::string::npos) return "'<' in attribute value";
            if (auto p = check_text(k + 2, close); !p.empty()) return p;
            k = close + 1;
        }
        if (stack.empty()) {
            if (++roots > 1) return "multiple root elements";
        }
        if (s[k] == '>') {
            stack.push_back(name);
            i = k + 1;
        } else {
            i = k + 2;
        }
    }
    if (!stack.empty()) return "unclosed <" + stack.back() + ">";
    if (roots != 1) return "no root element";
    return "";
}

/// Occurrences of `needle` in `hay`.
inline std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + needle.size())) ++n;
    return n;
}

}  // namespace radarpc::test
