#pragma once

// Occupancy grids, point clouds, and conversion between the two.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "radarpc/geometry.hpp"

namespace radarpc {

/// Binary range x azimuth x elevation voxel grid, range-major.
struct OccupancyGrid {
    CellGeometry geometry;
    std::uint64_t frame_id = 0;
    std::vector<std::uint8_t> occupancy;

    OccupancyGrid() = default;
    explicit OccupancyGrid(const CellGeometry& g, std::uint64_t frame = 0)
        : geometry(g), frame_id(frame), occupancy(g.grid_voxels(), 0) {}

    std::size_t index(std::size_t r, std::size_t a, std::size_t e) const {
        return (r * geometry.azimuth_bins + a) * geometry.elevation_bins + e;
    }
    std::uint8_t at(std::size_t r, std::size_t a, std::size_t e) const { return occupancy[index(r, a, e)]; }
    void set(std::size_t r, std::size_t a, std::size_t e, bool v = true) {
        occupancy[index(r, a, e)] = v ? 1 : 0;
    }

    std::size_t occupied_count() const {
        std::size_t n = 0;
        for (auto v : occupancy) n += v != 0;
        return n;
    }
    bool empty() const { return occupied_count() == 0; }

    void validate() const {
        geometry.validate();
        if (occupancy.size() != geometry.grid_voxels())
            throw ValidationError("grid.occupancy", "size does not match geometry");
        for (auto v : occupancy)
            if (v > 1) throw ValidationError("grid.occupancy", "values must be 0 or 1");
    }

    bool operator==(const OccupancyGrid&) const = default;
};

/// N points with L features stored row-major as f32.
/// L = 4: x, y, z, power proxy. L = 5: x, y, z, Doppler, power.
struct PointCloud {
    std::size_t features = 4;
    std::uint64_t frame_id = 0;
    std::vector<float> data;

    PointCloud() = default;
    explicit PointCloud(std::size_t l, std::uint64_t frame = 0) : features(l), frame_id(frame) {}

    std::size_t size() const { return features == 0 ? 0 : data.size() / features; }
    bool empty() const { return data.empty(); }

    std::span<const float> row(std::size_t i) const { return {data.data() + i * features, features}; }
    float x(std::size_t i) const { return data[i * features + 0]; }
    float y(std::size_t i) const { return data[i * features + 1]; }
    float z(std::size_t i) const { return data[i * features + 2]; }

    void push(std::initializer_list<float> row_values) {
        if (row_values.size() != features) throw ValidationError("cloud.row", "feature count mismatch");
        data.insert(data.end(), row_values.begin(), row_values.end());
    }

    void validate() const {
        if (features != 4 && features != 5) throw ValidationError("cloud.features", "L must be 4 or 5");
        if (data.size() % features != 0) throw ValidationError("cloud.data", "not a whole number of rows");
        for (std::size_t i = 0; i < size(); ++i)
            if (!std::isfinite(x(i)) || !std::isfinite(y(i)) || !std::isfinite(z(i)))
                throw ValidationError("cloud.data", "non-finite coordinate at row " + std::to_string(i));
    }

    bool operator==(const PointCloud&) const = default;
};

/// One point per occupied voxel at the voxel center, range-major order.
/// With a Doppler tensor the cloud has L = 5; otherwise L = 4 with power 1.0
/// unless a power tensor is given. Feature tensors are laid out like the grid.
inline PointCloud grid_to_pointcloud(const OccupancyGrid& grid,
                                     std::optional<std::span<const float>> doppler = std::nullopt,
                                     std::optional<std::span<const float>> power = std::nullopt) {
    const auto& g = grid.geometry;
    if (doppler && doppler->size() != grid.occupancy.size())
        throw ValidationError("doppler", "feature tensor does not match grid dimensions");
    if (power && power->size() != grid.occupancy.size())
        throw ValidationError("power", "feature tensor does not match grid dimensions");

    PointCloud cloud(doppler ? 5 : 4, grid.frame_id);
    for (std::size_t r = 0; r < g.range_bins; ++r) {
        const double rc = g.center(Axis::Range, r);
        for (std::size_t a = 0; a < g.azimuth_bins; ++a) {
            const double ac = g.center(Axis::Azimuth, a);
            for (std::size_t e = 0; e < g.elevation_bins; ++e) {
                const std::size_t idx = grid.index(r, a, e);
                if (!grid.occupancy[idx]) continue;
                const Cartesian p = spherical_to_cartesian(rc, ac, g.center(Axis::Elevation, e));
                const float pw = power ? (*power)[idx] : 1.0f;
                cloud.data.push_back(static_cast<float>(p.x));
                cloud.data.push_back(static_cast<float>(p.y));
                cloud.data.push_back(static_cast<float>(p.z));
                if (doppler) cloud.data.push_back((*doppler)[idx]);
                cloud.data.push_back(pw);
            }
        }
    }
    return cloud;
}

struct VoxelizeResult {
    OccupancyGrid grid;
    std::size_t dropped = 0;  // points outside the geometry extents
};

inline VoxelizeResult voxelize(const PointCloud& cloud, const CellGeometry& geometry) {
    VoxelizeResult out{OccupancyGrid(geometry, cloud.frame_id), 0};
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Spherical s = cartesian_to_spherical(cloud.x(i), cloud.y(i), cloud.z(i));
        const auto r = geometry.bin_of(Axis::Range, s.range);
        const auto a = geometry.bin_of(Axis::Azimuth, s.azimuth);
        const auto e = geometry.bin_of(Axis::Elevation, s.elevation);
        if (!r || !a || !e) {
            ++out.dropped;
            continue;
        }
        out.grid.set(*r, *a, *e);
    }
    return out;
}

}  // namespace radarpc
