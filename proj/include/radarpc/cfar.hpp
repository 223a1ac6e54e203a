#pragma once

// Classical CFAR detectors (CA, SOCA, GOCA, OS) along the range axis.
//
// Each (azimuth, Doppler) line is scanned with a sliding window of N_s
// training cells and G guard cells per side. Near the ends of the line the
// training set shrinks symmetrically; cells with fewer than two training
// cells per side are never declared. The scale factor for each window size
// comes from calibrate_threshold: closed form for CA, Monte Carlo bisection
// on exponential noise for the others.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "radarpc/cube.hpp"
#include "radarpc/grid.hpp"
#include "radarpc/util.hpp"

namespace radarpc {

enum class CfarVariant { CA, SOCA, GOCA, OS };

inline const char* to_string(CfarVariant v) {
    switch (v) {
        case CfarVariant::CA: return "CA";
        case CfarVariant::SOCA: return "SOCA";
        case CfarVariant::GOCA: return "GOCA";
        case CfarVariant::OS: return "OS";
    }
    return "?";
}

inline CfarVariant parse_cfar_variant(const std::string& s) {
    if (s == "CA") return CfarVariant::CA;
    if (s == "SOCA") return CfarVariant::SOCA;
    if (s == "GOCA") return CfarVariant::GOCA;
    if (s == "OS") return CfarVariant::OS;
    throw ValidationError("variant", "unknown CFAR variant '" + s + "' (expected CA, SOCA, GOCA or OS)");
}

struct CfarConfig {
    CfarVariant variant = CfarVariant::CA;
    std::size_t training_cells_per_side = 8;
    std::size_t guard_cells_per_side = 2;
    double target_pfa = 1e-3;
    std::size_t os_rank = 12;  // 1-based rank among 2*N_s sorted training cells (OS only)
    Axis axis = Axis::Range;
    std::uint64_t calibration_seed = 0xCFA5;

    void validate() const {
        if (training_cells_per_side < 1) throw ValidationError("training_cells_per_side", "must be >= 1");
        if (!(target_pfa > 0.0 && target_pfa < 1.0)) throw ValidationError("target_pfa", "must be in (0,1)");
        if (variant == CfarVariant::OS && (os_rank < 1 || os_rank > 2 * training_cells_per_side))
            throw ValidationError("os_rank", "must be in [1, 2*training_cells_per_side]");
        if (axis != Axis::Range) throw ValidationError("axis", "only the range axis is supported");
    }

    bool operator==(const CfarConfig&) const = default;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

namespace detail {

/// OS rank for a window shrunk to n cells per side, proportional to the full window.
inline std::size_t scaled_os_rank(const CfarConfig& c, std::size_t n) {
    if (n == c.training_cells_per_side) return c.os_rank;
    const double k = std::round(static_cast<double>(c.os_rank) * static_cast<double>(n) /
                                static_cast<double>(c.training_cells_per_side));
    return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, 2 * n);
}

/// Noise estimate from leading and lagging training cells.
inline double noise_estimate(CfarVariant v, std::span<const double> lead, std::span<const double> lag,
                             std::size_t os_rank, std::vector<double>& scratch) {
    switch (v) {
        case CfarVariant::CA: {
            double s = 0.0;
            for (double x : lead) s += x;
            for (double x : lag) s += x;
            return s / static_cast<double>(lead.size() + lag.size());
        }
        case CfarVariant::SOCA:
        case CfarVariant::GOCA: {
            double sl = 0.0, sg = 0.0;
            for (double x : lead) sl += x;
            for (double x : lag) sg += x;
            sl /= static_cast<double>(lead.size());
            sg /= static_cast<double>(lag.size());
            return v == CfarVariant::SOCA ? std::min(sl, sg) : std::max(sl, sg);
        }
        case CfarVariant::OS: {
            scratch.assign(lead.begin(), lead.end());
            scratch.insert(scratch.end(), lag.begin(), lag.end());
            auto kth = scratch.begin() + static_cast<std::ptrdiff_t>(os_rank - 1);
            std::nth_element(scratch.begin(), kth, scratch.end());
            return *kth;
        }
    }
    return 0.0;
}

}  // namespace detail

/// Closed-form CA-CFAR scale for N = 2*N_s exponential training cells.
inline double ca_cfar_alpha(std::size_t total_training_cells, double pfa) {
    const double n = static_cast<double>(total_training_cells);
    return n * (std::pow(pfa, -1.0 / n) - 1.0);
}

struct CalibrationResult {
    double alpha = 0.0;
    double measured_pfa = 0.0;  // on the calibration sample (CA: equals target)
    std::size_t iterations = 0;
};

/// Scale factor alpha such that P(X > alpha * Z) = target_pfa on exponential noise.
inline CalibrationResult calibrate_threshold_detailed(const CfarConfig& config) {
    config.validate();
    const std::size_t ns = config.training_cells_per_side;
    if (config.variant == CfarVariant::CA)
        return {ca_cfar_alpha(2 * ns, config.target_pfa), config.target_pfa, 0};

    // Pre-draw the ratio X/Z over a fixed noise sample; the measured pfa is
    // then a monotone step function of alpha and bisection is cheap.
    const std::size_t samples = static_cast<std::size_t>(std::ceil(4000.0 / config.target_pfa));
    Rng rng(derive_seed(config.calibration_seed,
                        {static_cast<std::uint64_t>(config.variant), ns, config.os_rank}));
    std::vector<double> ratio(samples);
    std::vector<double> lead(ns), lag(ns), scratch;
    for (std::size_t s = 0; s < samples; ++s) {
        for (auto& x : lead) x = rng.exponential(1.0);
        for (auto& x : lag) x = rng.exponential(1.0);
        const double cut = rng.exponential(1.0);
        const double z = detail::noise_estimate(config.variant, lead, lag, config.os_rank, scratch);
        ratio[s] = z > 0.0 ? cut / z : std::numeric_limits<double>::infinity();
    }
    auto measured = [&](double alpha) {
        std::size_t hits = 0;
        for (double q : ratio) hits += q > alpha;
        return static_cast<double>(hits) / static_cast<double>(samples);
    };

    double lo = 0.0, hi = 1.0;
    while (measured(hi) > config.target_pfa) {
        hi *= 2.0;
        if (hi > 1e12) throw CalibrationError("calibration failed: pfa not reachable");
    }
    const double tol = 0.05 * config.target_pfa;
    for (std::size_t it = 1; it <= 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = measured(mid);
        if (std::abs(p - config.target_pfa) <= tol) return {mid, p, it};
        if (p > config.target_pfa)
            lo = mid;
        else
            hi = mid;
    }
    throw CalibrationError(std::string("calibration failed: bisection did not converge within 60 iterations for ") +
                           to_string(config.variant));
}

/// Thread-safe memo of calibrations keyed by the fields that affect alpha.
inline double calibrate_threshold(const CfarConfig& config) {
    static std::mutex mutex;
    static std::map<std::tuple<int, std::size_t, std::size_t, double, std::uint64_t>, double> cache;
    const auto key = std::make_tuple(static_cast<int>(config.variant), config.training_cells_per_side,
                                     config.variant == CfarVariant::OS ? config.os_rank : 0, config.target_pfa,
                                     config.calibration_seed);
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    const double alpha = calibrate_threshold_detailed(config).alpha;
    std::lock_guard lock(mutex);
    cache.emplace(key, alpha);
    return alpha;
}

/// Per-window-size scale factors: alphas[n] applies to n training cells per side.
struct CfarThresholds {
    std::vector<double> alphas;

    static CfarThresholds calibrated(const CfarConfig& config) {
        CfarThresholds t;
        t.alphas.assign(config.training_cells_per_side + 1, 0.0);
        for (std::size_t n = std::min<std::size_t>(2, config.training_cells_per_side);
             n <= config.training_cells_per_side; ++n) {
            CfarConfig c = config;
            c.training_cells_per_side = n;
            c.os_rank = detail::scaled_os_rank(config, n);
            t.alphas[n] = calibrate_threshold(c);
        }
        return t;
    }

    static CfarThresholds uniform(const CfarConfig& config, double alpha) {
        CfarThresholds t;
        t.alphas.assign(config.training_cells_per_side + 1, alpha);
        return t;
    }
};

/// Cell-level detections over (range, azimuth, Doppler), same layout as the cube.
inline std::vector<std::uint8_t> cfar_mask(const RadarCubePair& cube, const CfarConfig& config,
                                           const CfarThresholds& thresholds) {
    config.validate();
    const CellGeometry& g = cube.geometry;
    const std::size_t ns = config.training_cells_per_side;
    const std::size_t guard = config.guard_cells_per_side;
    const std::size_t len = g.range_bins;
    if (ns + guard >= len || 2 * (ns + guard) + 1 > len)
        throw ValidationError("training_cells_per_side",
                              "window of " + std::to_string(ns + guard) + " cells per side does not fit " +
                                  std::to_string(len) + " range bins");
    const std::size_t min_side = std::min<std::size_t>(2, ns);

    std::vector<std::uint8_t> mask(g.cube_cells(), 0);
    std::vector<double> line(len), scratch;
    for (std::size_t a = 0; a < g.azimuth_bins; ++a) {
        for (std::size_t d = 0; d < g.doppler_bins; ++d) {
            for (std::size_t r = 0; r < len; ++r) line[r] = cube.power[cube.index(r, a, d)];
            for (std::size_t r = 0; r < len; ++r) {
                const std::size_t lead_avail = r > guard ? r - guard : 0;
                const std::size_t lag_avail = r + guard + 1 < len ? len - (r + guard + 1) : 0;
                const std::size_t n = std::min({ns, lead_avail, lag_avail});
                if (n < min_side) continue;
                const std::span<const double> lead(line.data() + (r - guard - n), n);
                const std::span<const double> lag(line.data() + r + guard + 1, n);
                const double z = detail::noise_estimate(config.variant, lead, lag,
                                                        detail::scaled_os_rank(config, n), scratch);
                if (line[r] > thresholds.alphas[n] * z) mask[cube.index(r, a, d)] = 1;
            }
        }
    }
    return mask;
}

/// Detections projected to (range, azimuth, elevation) plus per-voxel features
/// of the strongest detection landing in each voxel.
struct CfarDetections {
    OccupancyGrid grid;
    std::vector<float> doppler;  // m/s, grid layout
    std::vector<float> power;    // linear, grid layout
    std::size_t cell_detections = 0;
};

inline CfarDetections project_detections(const RadarCubePair& cube, const std::vector<std::uint8_t>& mask) {
    const CellGeometry& g = cube.geometry;
    CfarDetections out;
    out.grid = OccupancyGrid(g, cube.frame_id);
    out.doppler.assign(g.grid_voxels(), 0.0f);
    out.power.assign(g.grid_voxels(), 0.0f);
    for (std::size_t r = 0; r < g.range_bins; ++r)
        for (std::size_t a = 0; a < g.azimuth_bins; ++a)
            for (std::size_t d = 0; d < g.doppler_bins; ++d) {
                const std::size_t c = cube.index(r, a, d);
                if (!mask[c]) continue;
                ++out.cell_detections;
                const auto e = g.bin_of(Axis::Elevation, cube.elevation[c]);
                const std::size_t eb = e ? *e : (cube.elevation[c] < g.elevation.min ? 0 : g.elevation_bins - 1);
                const std::size_t v = out.grid.index(r, a, eb);
                out.grid.occupancy[v] = 1;
                if (cube.power[c] > out.power[v]) {
                    out.power[v] = cube.power[c];
                    out.doppler[v] = static_cast<float>(g.center(Axis::Doppler, d));
                }
            }
    return out;
}

inline CfarDetections cfar_detect_detailed(const RadarCubePair& cube, const CfarConfig& config) {
    return project_detections(cube, cfar_mask(cube, config, CfarThresholds::calibrated(config)));
}

/// Occupancy grid of CFAR detections (Doppler collapsed by logical OR).
inline OccupancyGrid cfar_detect(const RadarCubePair& cube, const CfarConfig& config) {
    return cfar_detect_detailed(cube, config).grid;
}

}  // namespace radarpc
