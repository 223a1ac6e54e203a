#pragma once

// Spherical cell geometry shared by radar cubes and occupancy grids.
//
// Bins along each axis are uniform in the physical coordinate. A value maps
// to bin i when it lies in (edge_i, edge_{i+1}]; the first bin also owns the
// lower extent itself. Values on an interior edge therefore land in the
// lower of the two bins.

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>

#include "radarpc/util.hpp"

namespace radarpc {

enum class Axis { Range = 0, Azimuth = 1, Elevation = 2, Doppler = 3 };

inline const char* axis_name(Axis a) {
    switch (a) {
        case Axis::Range: return "range";
        case Axis::Azimuth: return "azimuth";
        case Axis::Elevation: return "elevation";
        case Axis::Doppler: return "doppler";
    }
    return "?";
}

struct Extent {
    double min = 0.0;
    double max = 1.0;

    double span() const { return max - min; }
    bool operator==(const Extent&) const = default;
};

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

struct CellGeometry {
    std::size_t range_bins = 128;
    std::size_t azimuth_bins = 64;
    std::size_t elevation_bins = 16;
    std::size_t doppler_bins = 32;
    Extent range{1.0, 50.0};                                       // meters
    Extent azimuth{deg_to_rad(-60.0), deg_to_rad(60.0)};           // radians
    Extent elevation{deg_to_rad(-15.0), deg_to_rad(15.0)};         // radians
    Extent doppler{-10.0, 10.0};                                   // m/s

    bool operator==(const CellGeometry&) const = default;

    std::size_t bins(Axis a) const {
        switch (a) {
            case Axis::Range: return range_bins;
            case Axis::Azimuth: return azimuth_bins;
            case Axis::Elevation: return elevation_bins;
            case Axis::Doppler: return doppler_bins;
        }
        return 0;
    }

    const Extent& extent(Axis a) const {
        switch (a) {
            case Axis::Range: return range;
            case Axis::Azimuth: return azimuth;
            case Axis::Elevation: return elevation;
            case Axis::Doppler: return doppler;
        }
        return range;
    }

    double pitch(Axis a) const { return extent(a).span() / static_cast<double>(bins(a)); }

    /// Physical coordinate at the center of bin i.
    double center(Axis a, std::size_t i) const {
        const Extent& e = extent(a);
        return e.min + (static_cast<double>(i) + 0.5) * e.span() / static_cast<double>(bins(a));
    }

    double lower_edge(Axis a, std::size_t i) const {
        const Extent& e = extent(a);
        return e.min + static_cast<double>(i) * e.span() / static_cast<double>(bins(a));
    }

    /// Bin containing v, or nullopt outside [min, max].
    std::optional<std::size_t> bin_of(Axis a, double v) const {
        const Extent& e = extent(a);
        if (!(v >= e.min && v <= e.max)) return std::nullopt;
        const double n = static_cast<double>(bins(a));
        const double t = (v - e.min) * n / e.span();
        double idx = std::ceil(t) - 1.0;
        if (idx < 0.0) idx = 0.0;
        if (idx > n - 1.0) idx = n - 1.0;
        return static_cast<std::size_t>(idx);
    }

    /// Range x azimuth x Doppler cells in a radar cube.
    std::size_t cube_cells() const { return range_bins * azimuth_bins * doppler_bins; }
    /// Range x azimuth x elevation voxels in an occupancy grid.
    std::size_t grid_voxels() const { return range_bins * azimuth_bins * elevation_bins; }

    void validate() const {
        for (Axis a : {Axis::Range, Axis::Azimuth, Axis::Elevation, Axis::Doppler}) {
            const std::string name = std::string("geometry.") + axis_name(a);
            if (bins(a) < 1) throw ValidationError(name + "_bins", "bin count must be >= 1");
            const Extent& e = extent(a);
            if (!std::isfinite(e.min) || !std::isfinite(e.max) || !(e.min < e.max))
                throw ValidationError(name + "_extent", "extent must satisfy min < max");
        }
        if (range.min < 0.0) throw ValidationError("geometry.range_extent", "range must be non-negative");
    }

    /// Desk-scale default: 128 x 64 x 16 x 32 over [1,50] m, +-60 deg, +-15 deg, +-10 m/s.
    static CellGeometry desk_default() { return CellGeometry{}; }
};

struct Cartesian {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct Spherical {
    double range = 0.0;
    double azimuth = 0.0;
    double elevation = 0.0;
};

/// x forward, y left, z up.
inline Cartesian spherical_to_cartesian(double r, double azimuth, double elevation) {
    const double ce = std::cos(elevation);
    return {r * ce * std::cos(azimuth), r * ce * std::sin(azimuth), r * std::sin(elevation)};
}

inline Spherical cartesian_to_spherical(double x, double y, double z) {
    const double ground = std::hypot(x, y);
    const double r = std::hypot(ground, z);
    if (r == 0.0) return {};
    return {r, std::atan2(y, x), std::atan2(z, ground)};
}

}  // namespace radarpc
