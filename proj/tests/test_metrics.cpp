#include <cmath>

#include <gtest/gtest.h>

#include "radarpc/cube.hpp"
#include "radarpc/metrics.hpp"
#include "support.hpp"

using namespace radarpc;

namespace {

/// Grid with exactly the requested TP/FP/FN counts against its reference.
std::pair<OccupancyGrid, OccupancyGrid> counted_pair(const CellGeometry& geo, std::size_t tp, std::size_t fp,
                                                     std::size_t fn) {
    OccupancyGrid pred(geo), gt(geo);
    std::size_t i = 0;
    for (std::size_t k = 0; k < tp; ++k, ++i) pred.occupancy[i] = gt.occupancy[i] = 1;
    for (std::size_t k = 0; k < fp; ++k, ++i) pred.occupancy[i] = 1;
    for (std::size_t k = 0; k < fn; ++k, ++i) gt.occupancy[i] = 1;
    return {pred, gt};
}

PointCloud cloud_of(std::initializer_list<std::array<float, 3>> pts) {
    PointCloud c(4);
    for (const auto& p : pts) c.push({p[0], p[1], p[2], 1.0f});
    return c;
}

}  // namespace

TEST(DetectionStats, PerfectPrediction) {
    Rng rng(1);
    const auto g = test::random_grid(test::small_geometry(), rng, 0.1);
    const auto s = detection_stats(g, g);
    EXPECT_EQ(*s.pd, 1.0);
    EXPECT_EQ(*s.pfa, 0.0);
}

TEST(DetectionStats, HandCountedRates) {
    const CellGeometry geo = test::tiny_geometry(10, 10, 10, 1);  // 1000 voxels
    auto [pred, gt] = counted_pair(geo, 50, 47, 10);
    const auto s = detection_stats(pred, gt);
    EXPECT_EQ(s.tp, 50u);
    EXPECT_EQ(s.fp, 47u);
    EXPECT_EQ(s.fn, 10u);
    EXPECT_EQ(s.total, 1000u);
    EXPECT_DOUBLE_EQ(*s.pfa, 47.0 / 940.0);
    EXPECT_DOUBLE_EQ(*s.pfa, 0.05);
    auto [p2, g2] = counted_pair(geo, 6, 0, 2);
    EXPECT_DOUBLE_EQ(*detection_stats(p2, g2).pd, 0.75);
}

TEST(DetectionStats, CountIdentitiesOnRandomGrids) {
    Rng rng(2);
    const CellGeometry geo = test::small_geometry();
    for (int i = 0; i < 50; ++i) {
        const auto p = test::random_grid(geo, rng, rng.uniform());
        const auto g = test::random_grid(geo, rng, rng.uniform());
        const auto s = detection_stats(p, g);
        EXPECT_EQ(s.tp + s.fn, g.occupied_count());
        EXPECT_EQ(s.tp + s.fp, p.occupied_count());
        if (s.pd) { EXPECT_TRUE(*s.pd >= 0.0 && *s.pd <= 1.0); }
        if (s.pfa) { EXPECT_TRUE(*s.pfa >= 0.0 && *s.pfa <= 1.0); }
    }
}

TEST(DetectionStats, EmptyReferenceLeavesPdUndefined) {
    const CellGeometry geo = test::tiny_geometry();
    OccupancyGrid pred(geo), gt(geo);
    pred.set(0, 0, 0);
    const auto s = detection_stats(pred, gt);
    EXPECT_FALSE(s.pd.has_value());
    ASSERT_TRUE(s.pfa.has_value());
}

TEST(DetectionStats, GeometryMismatchRejected) {
    EXPECT_THROW(detection_stats(OccupancyGrid(test::tiny_geometry()), OccupancyGrid(test::small_geometry())),
                 ValidationError);
}

TEST(Chamfer, HandEnumeratedExample) {
    const auto s1 = cloud_of({{0, 0, 0}, {2, 0, 0}});
    const auto s2 = cloud_of({{1, 0, 0}});
    EXPECT_DOUBLE_EQ(chamfer_distance(s1, s2), 2.0);
    EXPECT_DOUBLE_EQ(chamfer_distance_brute(s1, s2), 2.0);
}

TEST(Chamfer, IdentityIsZeroAndSymmetric) {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto a = test::random_cloud(1 + rng.below(300), rng);
        const auto b = test::random_cloud(1 + rng.below(300), rng);
        EXPECT_EQ(chamfer_distance(a, a), 0.0);
        EXPECT_NEAR(chamfer_distance(a, b), chamfer_distance(b, a), 1e-12);
        EXPECT_GE(chamfer_distance(a, b), 0.0);
    }
}

TEST(Chamfer, IndexedMatchesBruteForce) {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto a = test::random_cloud(1 + rng.below(500), rng, rng.uniform(0.1, 50.0));
        const auto b = test::random_cloud(1 + rng.below(500), rng, rng.uniform(0.1, 50.0));
        EXPECT_NEAR(chamfer_distance(a, b), chamfer_distance_brute(a, b), 1e-9);
    }
}

TEST(Chamfer, IndexedMatchesBruteForceWithDuplicatesAndLines) {
    // degenerate layouts: repeated points and collinear sets stress tree splits
    PointCloud a(4), b(4);
    for (int i = 0; i < 200; ++i) {
        a.push({static_cast<float>(i % 7), 0.0f, 0.0f, 1.0f});
        b.push({static_cast<float>(i) * 0.1f, 0.0f, 0.0f, 1.0f});
    }
    EXPECT_NEAR(chamfer_distance(a, b), chamfer_distance_brute(a, b), 1e-9);
}

TEST(Chamfer, TranslationCovariant) {
    Rng rng(5);
    auto a = test::random_cloud(100, rng), b = test::random_cloud(80, rng);
    const double before = chamfer_distance(a, b);
    for (auto* c : {&a, &b})
        for (std::size_t i = 0; i < c->size(); ++i) {
            c->data[i * 4 + 0] += 4.0f;
            c->data[i * 4 + 2] -= 2.0f;
        }
    EXPECT_NEAR(chamfer_distance(a, b), before, 1e-5);
}

TEST(Chamfer, IgnoresExtraFeatures) {
    PointCloud a(5), b(4);
    a.push({1, 2, 3, 9.0f, 100.0f});
    b.push({1, 2, 3, 0.5f});
    EXPECT_EQ(chamfer_distance(a, b), 0.0);
}

TEST(Chamfer, EmptyCloudIsDistinctError) {
    EXPECT_THROW(chamfer_distance(PointCloud(4), cloud_of({{0, 0, 0}})), EmptyCloudError);
    EXPECT_THROW(chamfer_distance(cloud_of({{0, 0, 0}}), PointCloud(4)), EmptyCloudError);
}

TEST(Misalignment, ShiftedCloudLosesOverlapButBeatsDecoy) {
    const CellGeometry geo = CellGeometry::desk_default();
    // surface patch one range bin thick, as a radar sees the near face of an object
    OccupancyGrid shell(geo);
    for (std::size_t a = 20; a < 40; ++a)
        for (std::size_t e = 4; e < 12; ++e) shell.set(30, a, e);
    const PointCloud gt = grid_to_pointcloud(shell);
    const double pitch = geo.pitch(Axis::Range);
    for (double k : {1.5, 2.0, 3.7}) {
        const auto m = misalignment_demo(gt, k * pitch, geo);
        EXPECT_EQ(m.pd_shifted, 0.0) << k;
        EXPECT_GT(m.pfa_shifted, 0.0);
        EXPECT_EQ(m.pd_far, 0.0);
        EXPECT_LT(m.bcd_shifted, m.bcd_far);
        // a radial translation moves every point by exactly the shift
        EXPECT_NEAR(m.bcd_shifted, 2.0 * k * pitch, 1e-4);
    }
}

TEST(Misalignment, ZeroShiftIsPerfect) {
    const CellGeometry geo = test::small_geometry();
    OccupancyGrid g(geo);
    g.set(10, 5, 3);
    g.set(11, 5, 3);
    const auto m = misalignment_demo(grid_to_pointcloud(g), 0.0, geo);
    EXPECT_EQ(m.pd_shifted, 1.0);
    EXPECT_EQ(m.bcd_shifted, 0.0);
}

TEST(Misalignment, SubPitchShiftRejected) {
    const CellGeometry geo = test::small_geometry();
    OccupancyGrid g(geo);
    g.set(10, 5, 3);
    EXPECT_THROW(misalignment_demo(grid_to_pointcloud(g), 0.5 * geo.pitch(Axis::Range), geo), ValidationError);
    EXPECT_THROW(misalignment_demo(PointCloud(4), 2.0, geo), ValidationError);
}

TEST(EvaluateRun, PerfectRun) {
    Rng rng(6);
    const CellGeometry geo = test::small_geometry();
    std::vector<OccupancyGrid> g;
    for (int i = 0; i < 4; ++i) g.push_back(test::random_grid(geo, rng, 0.05));
    const auto r = evaluate_run(g, g, geo);
    EXPECT_EQ(*r.mean_pd, 1.0);
    EXPECT_EQ(*r.mean_pfa, 0.0);
    EXPECT_EQ(*r.mean_bcd, 0.0);
    EXPECT_EQ(r.empty_frame_fraction, 0.0);
}

TEST(EvaluateRun, AllEmptyPredictionsAreInconclusive) {
    Rng rng(7);
    const CellGeometry geo = test::small_geometry();
    std::vector<OccupancyGrid> gt, pred;
    for (int i = 0; i < 3; ++i) {
        gt.push_back(test::random_grid(geo, rng, 0.05));
        pred.emplace_back(geo);
    }
    const auto r = evaluate_run(pred, gt, geo);
    EXPECT_EQ(r.empty_frame_fraction, 1.0);
    EXPECT_FALSE(r.mean_bcd.has_value());
    EXPECT_EQ(*r.mean_pd, 0.0);
}

TEST(EvaluateRun, AggregateIsArithmeticMeanOverDefinedFrames) {
    MetricsReport r;
    r.per_frame.resize(3);
    r.per_frame[0].bcd = 1.0;
    r.per_frame[0].predicted_points = 5;
    r.per_frame[1].bcd = 3.0;
    r.per_frame[1].predicted_points = 5;
    r.per_frame[2].predicted_points = 0;  // inconclusive
    aggregate(r);
    EXPECT_DOUBLE_EQ(*r.mean_bcd, 2.0);
    EXPECT_NEAR(r.empty_frame_fraction, 1.0 / 3.0, 1e-15);
}

TEST(EvaluateRun, LengthMismatchRejected) {
    const CellGeometry geo = test::tiny_geometry();
    EXPECT_THROW(evaluate_run({OccupancyGrid(geo)}, {}, geo), ValidationError);
}
