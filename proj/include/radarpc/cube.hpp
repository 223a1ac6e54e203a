#pragma once

// Radar cube model and the synthetic scene renderer.
//
// A scene is a set of box-shaped targets observed over a sequence of frames.
// Each frame yields a radar cube pair (power and elevation over range x
// azimuth x Doppler) and a LiDAR-like ground truth cloud with its occupancy
// grid. Frame f draws from its own random stream derived from (seed, f), so
// frames can be rendered in any order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radarpc/geometry.hpp"
#include "radarpc/grid.hpp"
#include "radarpc/util.hpp"

namespace radarpc {

/// Paired power and elevation tensors, range-major (range, azimuth, Doppler).
struct RadarCubePair {
    CellGeometry geometry;
    std::uint64_t frame_id = 0;
    double timestamp = 0.0;
    std::vector<float> power;      // linear power, >= 0
    std::vector<float> elevation;  // radians, within geometry.elevation

    RadarCubePair() = default;
    explicit RadarCubePair(const CellGeometry& g, std::uint64_t frame = 0, double t = 0.0)
        : geometry(g), frame_id(frame), timestamp(t), power(g.cube_cells(), 0.0f),
          elevation(g.cube_cells(), 0.0f) {}

    std::size_t index(std::size_t r, std::size_t a, std::size_t d) const {
        return (r * geometry.azimuth_bins + a) * geometry.doppler_bins + d;
    }

    void validate() const {
        geometry.validate();
        const std::size_t n = geometry.cube_cells();
        if (power.size() != n) throw ValidationError("cube.power", "size does not match geometry");
        if (elevation.size() != n) throw ValidationError("cube.elevation", "size does not match geometry");
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(power[i]) || power[i] < 0.0f)
                throw ValidationError("cube.power", "non-finite or negative value at cell " + std::to_string(i));
            const double el = elevation[i];
            // f32 storage may round a value sitting on the extent edge just past it.
            const double slack = 1e-6;
            if (!std::isfinite(el) || el < geometry.elevation.min - slack || el > geometry.elevation.max + slack)
                throw ValidationError("cube.elevation", "value outside elevation extent at cell " + std::to_string(i));
        }
    }

    bool operator==(const RadarCubePair&) const = default;
};

struct Target {
    Cartesian center;                   // meters
    Cartesian half_extents;             // meters
    double radial_velocity = 0.0;       // m/s, positive receding
    double reflectivity = 1.0;          // linear power added per covered cell
    double surface_point_density = 20.0;  // GT samples per m^2
    double flicker_probability = 0.0;   // per-frame dropout of the radar return

    void validate(std::size_t index) const {
        const std::string f = "targets[" + std::to_string(index) + "]";
        if (!(half_extents.x >= 0 && half_extents.y >= 0 && half_extents.z >= 0))
            throw ValidationError(f + ".half_extents", "must be >= 0");
        if (!(reflectivity > 0.0) || !std::isfinite(reflectivity))
            throw ValidationError(f + ".reflectivity", "must be > 0");
        if (!(flicker_probability >= 0.0 && flicker_probability <= 1.0))
            throw ValidationError(f + ".flicker_probability", "must be in [0,1]");
        if (!(surface_point_density >= 0.0) || !std::isfinite(surface_point_density))
            throw ValidationError(f + ".surface_point_density", "must be >= 0");
        if (!std::isfinite(center.x) || !std::isfinite(center.y) || !std::isfinite(center.z) ||
            !std::isfinite(radial_velocity))
            throw ValidationError(f + ".center", "must be finite");
    }
};

struct SceneSpec {
    std::vector<Target> targets;
    double noise_mean_power = 1.0;
    std::uint64_t seed = 0;
    std::size_t frame_count = 1;
    double frame_interval = 0.1;  // seconds
    double ego_velocity = 0.0;    // m/s along +x

    void validate() const {
        if (frame_count < 1) throw ValidationError("frame_count", "must be >= 1");
        if (!(noise_mean_power > 0.0) || !std::isfinite(noise_mean_power))
            throw ValidationError("noise_mean_power", "must be > 0");
        if (!(frame_interval >= 0.0) || !std::isfinite(frame_interval))
            throw ValidationError("frame_interval", "must be >= 0");
        if (!std::isfinite(ego_velocity)) throw ValidationError("ego_velocity", "must be finite");
        for (std::size_t i = 0; i < targets.size(); ++i) targets[i].validate(i);
    }
};

/// A target (or its Doppler) left the geometry extents.
class TargetOutOfBounds : public Error {
public:
    TargetOutOfBounds(std::size_t target, std::uint64_t frame, const std::string& what)
        : Error("target " + std::to_string(target) + " outside geometry extents at frame " +
                std::to_string(frame) + ": " + what),
          target_(target), frame_(frame) {}
    std::size_t target_index() const noexcept { return target_; }
    std::uint64_t frame() const noexcept { return frame_; }

private:
    std::size_t target_;
    std::uint64_t frame_;
};

namespace detail {

/// Stream tags so radar, GT, and any future consumers never share draws.
inline constexpr std::uint64_t kRadarStream = 1;
inline constexpr std::uint64_t kFlickerStream = 2;  // kept apart so noise does not depend on the target list

struct TargetState {
    Cartesian center;
    Spherical sph;
    double doppler = 0.0;
};

inline TargetState target_state(const SceneSpec& spec, const Target& t, std::uint64_t frame) {
    const double time = static_cast<double>(frame) * spec.frame_interval;
    const Spherical s0 = cartesian_to_spherical(t.center.x, t.center.y, t.center.z);
    Cartesian c = t.center;
    if (s0.range > 0.0) {
        const double step = t.radial_velocity * time / s0.range;
        c.x += step * t.center.x;
        c.y += step * t.center.y;
        c.z += step * t.center.z;
    }
    c.x -= spec.ego_velocity * time;
    TargetState st;
    st.center = c;
    st.sph = cartesian_to_spherical(c.x, c.y, c.z);
    const double los_x = st.sph.range > 0.0 ? c.x / st.sph.range : 1.0;
    st.doppler = t.radial_velocity - spec.ego_velocity * los_x;
    return st;
}

inline void check_bounds(const SceneSpec& spec, const CellGeometry& g) {
    for (std::uint64_t f = 0; f < spec.frame_count; ++f) {
        for (std::size_t i = 0; i < spec.targets.size(); ++i) {
            const TargetState st = target_state(spec, spec.targets[i], f);
            if (!g.bin_of(Axis::Range, st.sph.range)) throw TargetOutOfBounds(i, f, "range");
            if (!g.bin_of(Axis::Azimuth, st.sph.azimuth)) throw TargetOutOfBounds(i, f, "azimuth");
            if (!g.bin_of(Axis::Elevation, st.sph.elevation)) throw TargetOutOfBounds(i, f, "elevation");
            if (!g.bin_of(Axis::Doppler, st.doppler)) throw TargetOutOfBounds(i, f, "doppler");
        }
    }
}

struct AxisSpan {
    std::size_t lo = 0;  // first covered bin
    std::size_t hi = 0;  // last covered bin
};

/// Bins overlapping [vmin, vmax], clamped into the axis.
inline AxisSpan covered_bins(const CellGeometry& g, Axis axis, double vmin, double vmax) {
    const Extent& e = g.extent(axis);
    vmin = std::clamp(vmin, e.min, e.max);
    vmax = std::clamp(vmax, e.min, e.max);
    return {*g.bin_of(axis, vmin), *g.bin_of(axis, vmax)};
}

/// Weight of bin i under a covered span with a one-bin linear roll-off.
inline double rolloff_weight(const AxisSpan& s, std::size_t i) {
    if (i >= s.lo && i <= s.hi) return 1.0;
    if (i + 1 == s.lo || i == s.hi + 1) return 0.5;
    return 0.0;
}

struct Footprint {
    AxisSpan range, azimuth, doppler;
};

inline Footprint target_footprint(const CellGeometry& g, const Target& t, const TargetState& st) {
    double rmin = st.sph.range, rmax = st.sph.range;
    double amin = st.sph.azimuth, amax = st.sph.azimuth;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1}) {
                const Spherical s = cartesian_to_spherical(st.center.x + sx * t.half_extents.x,
                                                           st.center.y + sy * t.half_extents.y,
                                                           st.center.z + sz * t.half_extents.z);
                rmin = std::min(rmin, s.range);
                rmax = std::max(rmax, s.range);
                amin = std::min(amin, s.azimuth);
                amax = std::max(amax, s.azimuth);
            }
    Footprint fp;
    fp.range = covered_bins(g, Axis::Range, rmin, rmax);
    fp.azimuth = covered_bins(g, Axis::Azimuth, amin, amax);
    fp.doppler = covered_bins(g, Axis::Doppler, st.doppler, st.doppler);
    return fp;
}

inline std::size_t lo_ring(std::size_t lo) { return lo == 0 ? 0 : lo - 1; }
inline std::size_t hi_ring(std::size_t hi, std::size_t n) { return std::min(hi + 1, n - 1); }

/// Evenly spaced samples on the six faces of a box.
inline void sample_box_surface(const Cartesian& c, const Cartesian& h, double density, float power,
                               PointCloud& cloud) {
    const double per_meter = std::sqrt(density);
    auto count = [&](double half) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2.0 * half * per_meter)));
    };
    auto coord = [](double mid, double half, std::size_t i, std::size_t n) {
        return mid - half + (static_cast<double>(i) + 0.5) * 2.0 * half / static_cast<double>(n);
    };
    const double center[3] = {c.x, c.y, c.z};
    const double half[3] = {h.x, h.y, h.z};
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        const std::size_t nu = count(half[u]);
        const std::size_t nv = count(half[v]);
        for (int side : {-1, 1}) {
            for (std::size_t i = 0; i < nu; ++i) {
                for (std::size_t j = 0; j < nv; ++j) {
                    double p[3];
                    p[axis] = center[axis] + side * half[axis];
                    p[u] = coord(center[u], half[u], i, nu);
                    p[v] = coord(center[v], half[v], j, nv);
                    cloud.push({static_cast<float>(p[0]), static_cast<float>(p[1]), static_cast<float>(p[2]), power});
                }
            }
        }
    }
}

}  // namespace detail

/// Renders one radar frame. Exposed so callers can render frames in parallel.
inline RadarCubePair render_radar_frame(const SceneSpec& spec, const CellGeometry& g, std::uint64_t frame) {
    RadarCubePair cube(g, frame, static_cast<double>(frame) * spec.frame_interval);
    Rng rng(derive_seed(spec.seed, {frame, detail::kRadarStream}));

    Rng flicker(derive_seed(spec.seed, {frame, detail::kFlickerStream}));
    std::vector<bool> present(spec.targets.size());
    for (std::size_t i = 0; i < spec.targets.size(); ++i)
        present[i] = !flicker.bernoulli(spec.targets[i].flicker_probability);

    const std::size_t n = g.cube_cells();
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i) power[i] = rng.exponential(spec.noise_mean_power);
    for (std::size_t i = 0; i < n; ++i)
        cube.elevation[i] = static_cast<float>(rng.uniform(g.elevation.min, g.elevation.max));

    std::vector<double> strongest(n, 0.0);
    for (std::size_t t = 0; t < spec.targets.size(); ++t) {
        if (!present[t]) continue;
        const Target& target = spec.targets[t];
        const detail::TargetState st = detail::target_state(spec, target, frame);
        const detail::Footprint fp = detail::target_footprint(g, target, st);
        const float el = static_cast<float>(st.sph.elevation);
        for (std::size_t r = detail::lo_ring(fp.range.lo); r <= detail::hi_ring(fp.range.hi, g.range_bins); ++r) {
            const double wr = detail::rolloff_weight(fp.range, r);
            for (std::size_t a = detail::lo_ring(fp.azimuth.lo);
                 a <= detail::hi_ring(fp.azimuth.hi, g.azimuth_bins); ++a) {
                const double wa = detail::rolloff_weight(fp.azimuth, a);
                for (std::size_t d = detail::lo_ring(fp.doppler.lo);
                     d <= detail::hi_ring(fp.doppler.hi, g.doppler_bins); ++d) {
                    const double w = wr * wa * detail::rolloff_weight(fp.doppler, d);
                    if (w == 0.0) continue;
                    const std::size_t idx = cube.index(r, a, d);
                    const double added = target.reflectivity * w;
                    power[idx] += added;
                    if (added > strongest[idx]) {
                        strongest[idx] = added;
                        cube.elevation[idx] = el;
                    }
                }
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) cube.power[i] = static_cast<float>(power[i]);
    return cube;
}

/// Radar cube pairs for every frame of the scene.
inline std::vector<RadarCubePair> render_radar_frames(const SceneSpec& spec, const CellGeometry& geometry) {
    spec.validate();
    geometry.validate();
    detail::check_bounds(spec, geometry);
    std::vector<RadarCubePair> frames(spec.frame_count);
    parallel_for(spec.frame_count, [&](std::size_t f) { frames[f] = render_radar_frame(spec, geometry, f); });
    return frames;
}

struct GroundTruthFrame {
    PointCloud cloud;     // L = 4, power proxy = target reflectivity
    OccupancyGrid grid;   // voxelize(cloud)
};

inline GroundTruthFrame render_ground_truth_frame(const SceneSpec& spec, const CellGeometry& g, std::uint64_t frame) {
    GroundTruthFrame out;
    out.cloud = PointCloud(4, frame);
    for (const Target& t : spec.targets) {
        const detail::TargetState st = detail::target_state(spec, t, frame);
        detail::sample_box_surface(st.center, t.half_extents, t.surface_point_density,
                                   static_cast<float>(t.reflectivity), out.cloud);
    }
    out.grid = voxelize(out.cloud, g).grid;
    return out;
}

/// LiDAR-like ground truth for every frame. Flicker does not affect GT.
inline std::vector<GroundTruthFrame> render_ground_truth(const SceneSpec& spec, const CellGeometry& geometry) {
    spec.validate();
    geometry.validate();
    detail::check_bounds(spec, geometry);
    std::vector<GroundTruthFrame> frames(spec.frame_count);
    parallel_for(spec.frame_count, [&](std::size_t f) { frames[f] = render_ground_truth_frame(spec, geometry, f); });
    return frames;
}

// ---------------------------------------------------------------------------
// Random scene sampling for training and evaluation corpora.

struct SceneSampler {
    std::size_t min_targets = 2;
    std::size_t max_targets = 4;
    double min_reflectivity = 40.0;
    double max_reflectivity = 80.0;
    double max_speed = 4.0;           // |radial velocity|, m/s
    double max_half_extent = 0.8;     // x/y half extents, meters
    double half_height = 0.05;        // z half extent, meters
    double flicker_probability = 0.0;
    double noise_mean_power = 1.0;
    double surface_point_density = 25.0;
    std::size_t frame_count = 10;
    double frame_interval = 0.1;
};

/// Draws a scene whose targets stay inside the geometry for every frame.
/// Targets sit at elevation-bin centers so a thin target occupies one
/// elevation bin.
inline SceneSpec sample_scene(const SceneSampler& p, const CellGeometry& g, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x5CE4E}));
    SceneSpec spec;
    spec.seed = seed;
    spec.noise_mean_power = p.noise_mean_power;
    spec.frame_count = p.frame_count;
    spec.frame_interval = p.frame_interval;

    // range is drawn first, then the velocity is limited so the target stays inside for every frame
    const double duration = p.frame_interval * static_cast<double>(p.frame_count);
    const double margin = p.max_half_extent * 1.5 + g.pitch(Axis::Range);
    const double rlo = g.range.min + margin + 2.0;
    const double rhi = std::max(rlo, g.range.max - margin);
    const std::size_t n = p.min_targets + rng.below(p.max_targets - p.min_targets + 1);
    for (std::size_t i = 0; i < n; ++i) {
        Target t;
        const double r = rng.uniform(rlo, rhi);
        const double vmin = duration > 0.0 ? std::max(-p.max_speed, -(r - rlo) / duration) : -p.max_speed;
        const double vmax = duration > 0.0 ? std::min(p.max_speed, (rhi - r) / duration) : p.max_speed;
        const double az = rng.uniform(g.azimuth.min * 0.75, g.azimuth.max * 0.75);
        // interior elevation bins only
        const std::size_t e_lo = g.elevation_bins > 2 ? 1 : 0;
        const std::size_t e_hi = g.elevation_bins > 2 ? g.elevation_bins - 2 : g.elevation_bins - 1;
        const std::size_t eb = e_lo + rng.below(e_hi - e_lo + 1);
        const double el = g.center(Axis::Elevation, eb);
        t.center = spherical_to_cartesian(r, az, el);
        t.half_extents = {rng.uniform(0.1, p.max_half_extent), rng.uniform(0.1, p.max_half_extent), p.half_height};
        t.radial_velocity = rng.uniform(vmin, vmax);
        t.reflectivity = rng.uniform(p.min_reflectivity, p.max_reflectivity);
        t.surface_point_density = p.surface_point_density;
        t.flicker_probability = p.flicker_probability;
        spec.targets.push_back(t);
    }
    return spec;
}

}  // namespace radarpc
