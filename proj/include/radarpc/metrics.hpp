#pragma once

// Evaluation: voxelwise detection statistics on occupancy grids and
// bidirectional chamfer distance (BCD) on point clouds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "radarpc/grid.hpp"
#include "radarpc/util.hpp"

namespace radarpc {

struct DetectionStats {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t total = 0;        // voxels in the reference grid
    std::optional<double> pd;     // absent when the reference grid is empty
    std::optional<double> pfa;    // absent when the reference grid is full
};

/// Voxelwise TP/FP/FN of pred against the reference grid gt.
/// P_d = TP / (TP + FN); P_fa = FP / (total - TP - FN), i.e. over GT-empty voxels.
inline DetectionStats detection_stats(const OccupancyGrid& pred, const OccupancyGrid& gt) {
    if (!(pred.geometry == gt.geometry) || pred.occupancy.size() != gt.occupancy.size())
        throw ValidationError("geometry", "predicted and reference grids do not share geometry");
    DetectionStats s;
    s.total = gt.occupancy.size();
    for (std::size_t i = 0; i < s.total; ++i) {
        const bool p = pred.occupancy[i] != 0;
        const bool g = gt.occupancy[i] != 0;
        s.tp += p && g;
        s.fp += p && !g;
        s.fn += !p && g;
    }
    if (s.tp + s.fn > 0) s.pd = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    const std::size_t negatives = s.total - s.tp - s.fn;
    if (negatives > 0) s.pfa = static_cast<double>(s.fp) / static_cast<double>(negatives);
    return s;
}

// ---------------------------------------------------------------------------
// Chamfer distance

/// Either cloud was empty, so BCD has no value (reported as "inconclusive").
class EmptyCloudError : public Error {
public:
    using Error::Error;
};

using Point3 = std::array<double, 3>;

inline std::vector<Point3> spatial_points(const PointCloud& c) {
    std::vector<Point3> pts(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) pts[i] = {c.x(i), c.y(i), c.z(i)};
    return pts;
}

inline double distance(const Point3& a, const Point3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Static 3-d tree over a point set with exact nearest-neighbour queries.
class KdTree {
public:
    explicit KdTree(std::vector<Point3> points) : pts_(std::move(points)), order_(pts_.size()) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        nodes_.reserve(pts_.size());
        if (!pts_.empty()) root_ = build(0, pts_.size(), 0);
    }

    std::size_t size() const { return pts_.size(); }

    /// Euclidean distance to the nearest stored point.
    double nearest_distance(const Point3& q) const {
        double best = std::numeric_limits<double>::infinity();
        if (root_ >= 0) search(root_, q, best);
        return std::sqrt(best);
    }

private:
    struct Node {
        std::size_t point = 0;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::size_t lo, std::size_t hi, int depth) {
        if (lo >= hi) return -1;
        // split on the axis of largest spread
        Point3 mn{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
        Point3 mx{-mn[0], -mn[1], -mn[2]};
        for (std::size_t i = lo; i < hi; ++i)
            for (int k = 0; k < 3; ++k) {
                mn[k] = std::min(mn[k], pts_[order_[i]][k]);
                mx[k] = std::max(mx[k], pts_[order_[i]][k]);
            }
        int axis = 0;
        for (int k = 1; k < 3; ++k)
            if (mx[k] - mn[k] > mx[axis] - mn[axis]) axis = k;
        const std::size_t mid = lo + (hi - lo) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(lo),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(hi),
                         [&](std::size_t a, std::size_t b) { return pts_[a][axis] < pts_[b][axis]; });
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({order_[mid], axis, -1, -1});
        const int left = build(lo, mid, depth + 1);
        const int right = build(mid + 1, hi, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(int id, const Point3& q, double& best_sq) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const Point3& p = pts_[n.point];
        const double dx = q[0] - p[0], dy = q[1] - p[1], dz = q[2] - p[2];
        best_sq = std::min(best_sq, dx * dx + dy * dy + dz * dz);
        const double diff = q[static_cast<std::size_t>(n.axis)] - p[static_cast<std::size_t>(n.axis)];
        const int near = diff < 0 ? n.left : n.right;
        const int far = diff < 0 ? n.right : n.left;
        if (near >= 0) search(near, q, best_sq);
        if (far >= 0 && diff * diff <= best_sq) search(far, q, best_sq);
    }

    std::vector<Point3> pts_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

/// Mean over a of the distance to the nearest point of b, O(|a| |b|).
inline double mean_nearest_brute(const std::vector<Point3>& a, const std::vector<Point3>& b) {
    double sum = 0.0;
    for (const auto& p : a) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : b) {
            const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        sum += std::sqrt(best);
    }
    return sum / static_cast<double>(a.size());
}

inline double mean_nearest_indexed(const std::vector<Point3>& a, const KdTree& b) {
    double sum = 0.0;
    for (const auto& p : a) sum += b.nearest_distance(p);
    return sum / static_cast<double>(a.size());
}

/// Brute-force BCD on (x, y, z); extra features are ignored.
inline double chamfer_distance_brute(const PointCloud& s1, const PointCloud& s2) {
    if (s1.empty() || s2.empty()) throw EmptyCloudError("chamfer distance undefined for an empty cloud");
    const auto a = spatial_points(s1);
    const auto b = spatial_points(s2);
    return mean_nearest_brute(a, b) + mean_nearest_brute(b, a);
}

/// BCD via k-d trees; equals the brute-force value up to summation rounding.
inline double chamfer_distance(const PointCloud& s1, const PointCloud& s2) {
    if (s1.empty() || s2.empty()) throw EmptyCloudError("chamfer distance undefined for an empty cloud");
    auto a = spatial_points(s1);
    auto b = spatial_points(s2);
    const KdTree ta(a), tb(b);
    return mean_nearest_indexed(a, tb) + mean_nearest_indexed(b, ta);
}

// ---------------------------------------------------------------------------
// Misalignment demonstration

struct MisalignmentResult {
    double pd_shifted = 0.0;
    double pfa_shifted = 0.0;
    double bcd_shifted = 0.0;
    double pd_far = 0.0;
    double pfa_far = 0.0;
    double bcd_far = 0.0;
};

/// Moves every point outward along its line of sight by `shift` meters.
inline PointCloud radial_shift(const PointCloud& cloud, double shift) {
    PointCloud out = cloud;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = cloud.x(i), y = cloud.y(i), z = cloud.z(i);
        const double r = std::sqrt(x * x + y * y + z * z);
        if (r == 0.0) continue;
        const double s = (r + shift) / r;
        out.data[i * out.features + 0] = static_cast<float>(x * s);
        out.data[i * out.features + 1] = static_cast<float>(y * s);
        out.data[i * out.features + 2] = static_cast<float>(z * s);
    }
    return out;
}

/// Compares a slightly misaligned estimate (gt pushed out by `shift` in range)
/// with a far decoy (pushed out by 10 x shift). For a cloud one range bin
/// thick and shift > range pitch, the shifted estimate has P_d = 0 yet its BCD
/// stays below the decoy's. shift = 0 is accepted as the aligned reference.
inline MisalignmentResult misalignment_demo(const PointCloud& gt, double shift, const CellGeometry& geometry) {
    if (gt.empty()) throw ValidationError("gt", "reference cloud must be non-empty");
    const double pitch = geometry.pitch(Axis::Range);
    if (shift != 0.0 && !(shift > pitch))
        throw ValidationError("shift", "must exceed the range voxel pitch (" + std::to_string(pitch) + " m)");

    const OccupancyGrid gt_grid = voxelize(gt, geometry).grid;
    const PointCloud shifted = radial_shift(gt, shift);
    const PointCloud far = radial_shift(gt, 10.0 * shift);
    const auto s_near = detection_stats(voxelize(shifted, geometry).grid, gt_grid);
    const auto s_far = detection_stats(voxelize(far, geometry).grid, gt_grid);

    MisalignmentResult m;
    m.pd_shifted = s_near.pd.value_or(0.0);
    m.pfa_shifted = s_near.pfa.value_or(0.0);
    m.bcd_shifted = chamfer_distance(gt, shifted);
    m.pd_far = s_far.pd.value_or(0.0);
    m.pfa_far = s_far.pfa.value_or(0.0);
    m.bcd_far = chamfer_distance(gt, far);
    return m;
}

// ---------------------------------------------------------------------------
// Run evaluation

struct FrameMetrics {
    std::uint64_t frame_id = 0;
    std::optional<double> pd;
    std::optional<double> pfa;
    std::optional<double> bcd;  // absent when either cloud is empty
    std::size_t predicted_points = 0;
    std::size_t gt_points = 0;
};

struct MetricsReport {
    std::vector<FrameMetrics> per_frame;
    std::optional<double> mean_pd;
    std::optional<double> mean_pfa;
    std::optional<double> mean_bcd;
    double empty_frame_fraction = 0.0;  // frames whose prediction has no points
    std::string detector;
    std::string config_hash;
};

namespace detail {
inline std::optional<double> mean_of(const std::vector<FrameMetrics>& frames,
                                     std::optional<double> FrameMetrics::*field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : frames)
        if (f.*field) {
            sum += *(f.*field);
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}
}  // namespace detail

/// Aggregates per-frame metrics: means over frames where the value is defined.
inline void aggregate(MetricsReport& report) {
    report.mean_pd = detail::mean_of(report.per_frame, &FrameMetrics::pd);
    report.mean_pfa = detail::mean_of(report.per_frame, &FrameMetrics::pfa);
    report.mean_bcd = detail::mean_of(report.per_frame, &FrameMetrics::bcd);
    std::size_t empty = 0;
    for (const auto& f : report.per_frame) empty += f.predicted_points == 0;
    report.empty_frame_fraction =
        report.per_frame.empty() ? 0.0 : static_cast<double>(empty) / static_cast<double>(report.per_frame.size());
}

inline FrameMetrics evaluate_frame(const OccupancyGrid& pred, const OccupancyGrid& gt) {
    const DetectionStats s = detection_stats(pred, gt);
    const PointCloud pc = grid_to_pointcloud(pred);
    const PointCloud gc = grid_to_pointcloud(gt);
    FrameMetrics f;
    f.frame_id = gt.frame_id;
    f.pd = s.pd;
    f.pfa = s.pfa;
    f.predicted_points = pc.size();
    f.gt_points = gc.size();
    if (!pc.empty() && !gc.empty()) f.bcd = chamfer_distance(gc, pc);
    return f;
}

inline MetricsReport evaluate_run(const std::vector<OccupancyGrid>& pred, const std::vector<OccupancyGrid>& gt,
                                  const CellGeometry& geometry, std::string detector = {},
                                  std::string config_hash = {}) {
    if (pred.size() != gt.size())
        throw ValidationError("pred_grids", "expected " + std::to_string(gt.size()) + " frames, got " +
                                                std::to_string(pred.size()));
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (!(pred[i].geometry == geometry) || !(gt[i].geometry == geometry))
            throw ValidationError("geometry", "frame " + std::to_string(i) + " does not match the run geometry");
    MetricsReport report;
    report.detector = std::move(detector);
    report.config_hash = std::move(config_hash);
    report.per_frame.resize(gt.size());
    parallel_for(gt.size(), [&](std::size_t i) { report.per_frame[i] = evaluate_frame(pred[i], gt[i]); });
    aggregate(report);
    return report;
}

}  // namespace radarpc
