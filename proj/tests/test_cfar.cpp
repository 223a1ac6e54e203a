#include <cmath>

#include <gtest/gtest.h>

#include "radarpc/cfar.hpp"
#include "support.hpp"

using namespace radarpc;

namespace {

RadarCubePair noise_cube(const CellGeometry& g, std::uint64_t seed, double mean = 1.0) {
    RadarCubePair c(g);
    Rng rng(seed);
    for (auto& p : c.power) p = static_cast<float>(rng.exponential(mean));
    for (auto& e : c.elevation) e = static_cast<float>(rng.uniform(g.elevation.min, g.elevation.max));
    return c;
}

CfarConfig variant(CfarVariant v) {
    CfarConfig c;
    c.variant = v;
    return c;
}

/// False-alarm rate of OS-CFAR on exponential noise, independent of any simulation:
/// prod_{i<k} (N - i) / (N - i + alpha).
double os_pfa_oracle(std::size_t n, std::size_t k, double alpha) {
    double p = 1.0;
    for (std::size_t i = 0; i < k; ++i) p *= static_cast<double>(n - i) / (static_cast<double>(n - i) + alpha);
    return p;
}

double measured_pfa(const CfarConfig& cfg, const CellGeometry& g, int frames, std::uint64_t seed) {
    const auto th = CfarThresholds::calibrated(cfg);
    std::size_t hits = 0, cells = 0;
    const std::size_t span = cfg.training_cells_per_side + cfg.guard_cells_per_side;
    for (int f = 0; f < frames; ++f) {
        const auto cube = noise_cube(g, derive_seed(seed, {static_cast<std::uint64_t>(f)}));
        const auto mask = cfar_mask(cube, cfg, th);
        for (std::size_t r = span; r + span < g.range_bins; ++r)
            for (std::size_t a = 0; a < g.azimuth_bins; ++a)
                for (std::size_t d = 0; d < g.doppler_bins; ++d) {
                    hits += mask[cube.index(r, a, d)];
                    ++cells;
                }
    }
    return static_cast<double>(hits) / static_cast<double>(cells);
}

}  // namespace

TEST(CfarAlpha, ClosedFormValues) {
    EXPECT_NEAR(ca_cfar_alpha(16, 1e-3), 16.0 * (std::pow(10.0, 3.0 / 16.0) - 1.0), 1e-12);
    EXPECT_NEAR(ca_cfar_alpha(16, 1e-3), 8.639, 5e-4);
    EXPECT_DOUBLE_EQ(ca_cfar_alpha(1, 0.5), 1.0);
    EXPECT_NEAR(calibrate_threshold(CfarConfig{}), 8.639, 5e-4);
}

TEST(CfarCalibration, MonteCarloWithinFivePercentAndDeterministic) {
    for (CfarVariant v : {CfarVariant::SOCA, CfarVariant::GOCA, CfarVariant::OS}) {
        const auto r = calibrate_threshold_detailed(variant(v));
        EXPECT_NEAR(r.measured_pfa, 1e-3, 0.05e-3) << to_string(v);
        EXPECT_LE(r.iterations, 60u);
        EXPECT_EQ(calibrate_threshold_detailed(variant(v)).alpha, r.alpha);
    }
}

TEST(CfarCalibration, OsAgreesWithOrderStatisticOracle) {
    CfarConfig c = variant(CfarVariant::OS);
    const double alpha = calibrate_threshold(c);
    EXPECT_NEAR(os_pfa_oracle(16, 12, alpha), 1e-3, 0.1e-3);
    c.os_rank = 4;
    EXPECT_NEAR(os_pfa_oracle(16, 4, calibrate_threshold(c)), 1e-3, 0.1e-3);
}

TEST(CfarCalibration, CaMonteCarloCrossCheck) {
    // route CA through the same simulation path by comparing against an
    // explicit count at the closed-form alpha
    const double alpha = ca_cfar_alpha(16, 1e-3);
    Rng rng(77);
    std::size_t hits = 0;
    const std::size_t trials = 2000000;
    for (std::size_t t = 0; t < trials; ++t) {
        double s = 0.0;
        for (int i = 0; i < 16; ++i) s += rng.exponential(1.0);
        hits += rng.exponential(1.0) > alpha * s / 16.0;
    }
    EXPECT_NEAR(static_cast<double>(hits) / trials, 1e-3, 0.1e-3);
}

TEST(CfarDetect, MeasuredFalseAlarmRateNearTarget) {
    const CellGeometry g = CellGeometry::desk_default();
    for (CfarVariant v : {CfarVariant::CA, CfarVariant::SOCA, CfarVariant::GOCA, CfarVariant::OS}) {
        const double p = measured_pfa(variant(v), g, 8, 1000 + static_cast<int>(v));
        EXPECT_NEAR(p, 1e-3, 0.2e-3) << to_string(v);
    }
}

TEST(CfarDetect, StrongTargetDetectedByAllVariants) {
    const CellGeometry g = CellGeometry::desk_default();
    for (CfarVariant v : {CfarVariant::CA, CfarVariant::SOCA, CfarVariant::GOCA, CfarVariant::OS}) {
        RadarCubePair c = noise_cube(g, 5);
        const std::size_t idx = c.index(60, 20, 10);
        c.power[idx] = 1000.0f;  // 30 dB above the noise mean
        c.elevation[idx] = static_cast<float>(g.center(Axis::Elevation, 7));
        const auto det = cfar_detect(c, variant(v));
        EXPECT_EQ(det.at(60, 20, 7), 1) << to_string(v);
    }
}

TEST(CfarDetect, AllZeroCubeGivesEmptyGrid) {
    const CellGeometry g = test::small_geometry();
    RadarCubePair c(g);
    for (CfarVariant v : {CfarVariant::CA, CfarVariant::SOCA, CfarVariant::GOCA, CfarVariant::OS})
        EXPECT_TRUE(cfar_detect(c, variant(v)).empty());
}

TEST(CfarDetect, WindowMustFit) {
    const CellGeometry g = test::tiny_geometry(16, 4, 4, 4);
    CfarConfig c;  // 8 + 2 cells per side need 21 range bins
    EXPECT_THROW(cfar_detect(RadarCubePair(g), c), ValidationError);
    c.training_cells_per_side = 4;
    c.guard_cells_per_side = 1;
    EXPECT_NO_THROW(cfar_detect(RadarCubePair(g), c));
}

TEST(CfarDetect, ScaleInvariance) {
    const CellGeometry g = test::small_geometry();
    for (CfarVariant v : {CfarVariant::CA, CfarVariant::SOCA, CfarVariant::GOCA, CfarVariant::OS}) {
        const RadarCubePair base = noise_cube(g, 31);
        const auto ref = cfar_mask(base, variant(v), CfarThresholds::calibrated(variant(v)));
        for (float scale : {0.125f, 4.0f, 1024.0f}) {
            RadarCubePair s = base;
            for (auto& p : s.power) p *= scale;
            EXPECT_EQ(cfar_mask(s, variant(v), CfarThresholds::calibrated(variant(v))), ref) << to_string(v);
        }
    }
}

TEST(CfarDetect, SubsetOrderingAtEqualAlpha) {
    const CellGeometry g = test::small_geometry();
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        RadarCubePair c = noise_cube(g, 100 + trial);
        // add some structure so the leading and lagging halves differ
        for (std::size_t i = 0; i < c.power.size(); i += 37) c.power[i] += static_cast<float>(rng.uniform(0, 50));
        const double alpha = rng.uniform(1.0, 10.0);
        const auto go = cfar_mask(c, variant(CfarVariant::GOCA), CfarThresholds::uniform(CfarConfig{}, alpha));
        const auto ca = cfar_mask(c, variant(CfarVariant::CA), CfarThresholds::uniform(CfarConfig{}, alpha));
        const auto so = cfar_mask(c, variant(CfarVariant::SOCA), CfarThresholds::uniform(CfarConfig{}, alpha));
        for (std::size_t i = 0; i < ca.size(); ++i) {
            EXPECT_LE(go[i], ca[i]);
            EXPECT_LE(ca[i], so[i]);
        }
    }
}

TEST(CfarDetect, RaisingCellPowerKeepsItsDetection) {
    const CellGeometry g = test::small_geometry();
    const CfarConfig cfg;
    const auto th = CfarThresholds::calibrated(cfg);
    RadarCubePair c = noise_cube(g, 9);
    const auto before = cfar_mask(c, cfg, th);
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (!before[i]) continue;
        RadarCubePair up = c;
        up.power[i] *= 3.0f;
        EXPECT_EQ(cfar_mask(up, cfg, th)[i], 1);
    }
}

TEST(CfarDetect, EdgeCellsNeedTwoTrainingCellsPerSide) {
    const CellGeometry g = test::small_geometry();
    RadarCubePair c = noise_cube(g, 12);
    for (std::size_t r = 0; r < g.range_bins; ++r) c.power[c.index(r, 0, 0)] = 1e6f;
    const auto mask = cfar_mask(c, CfarConfig{}, CfarThresholds::uniform(CfarConfig{}, 1.0));
    // guard 2 + minimum 2 training cells: first declarable range bin is 4
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(mask[c.index(r, 5, 5)], 0);
    for (std::size_t r = g.range_bins - 4; r < g.range_bins; ++r) EXPECT_EQ(mask[c.index(r, 5, 5)], 0);
}

TEST(CfarDetect, DopplerCollapsedByOrAtElevationBin) {
    const CellGeometry g = test::small_geometry();
    RadarCubePair c(g);
    for (auto& e : c.elevation) e = static_cast<float>(g.center(Axis::Elevation, 0));
    std::vector<std::uint8_t> mask(g.cube_cells(), 0);
    mask[c.index(10, 3, 2)] = 1;
    mask[c.index(10, 3, 9)] = 1;
    c.elevation[c.index(10, 3, 2)] = static_cast<float>(g.center(Axis::Elevation, 5));
    c.elevation[c.index(10, 3, 9)] = static_cast<float>(g.center(Axis::Elevation, 5));
    c.power[c.index(10, 3, 9)] = 7.0f;
    const auto det = project_detections(c, mask);
    EXPECT_EQ(det.grid.occupied_count(), 1u);
    EXPECT_EQ(det.grid.at(10, 3, 5), 1);
    EXPECT_EQ(det.cell_detections, 2u);
    EXPECT_FLOAT_EQ(det.power[det.grid.index(10, 3, 5)], 7.0f);
    EXPECT_FLOAT_EQ(det.doppler[det.grid.index(10, 3, 5)], static_cast<float>(g.center(Axis::Doppler, 9)));
}

TEST(CfarConfig, Invariants) {
    CfarConfig c;
    c.training_cells_per_side = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = CfarConfig{};
    c.target_pfa = 1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = variant(CfarVariant::OS);
    c.os_rank = 17;
    EXPECT_THROW(c.validate(), ValidationError);
    c.os_rank = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    EXPECT_THROW(parse_cfar_variant("ML"), ValidationError);
}
