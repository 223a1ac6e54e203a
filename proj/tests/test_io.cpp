#include <cstring>
#include <string>

#include <gtest/gtest.h>

#include "radarpc/io.hpp"
#include "radarpc/nn/train.hpp"
#include "golden_fixtures.hpp"
#include "support.hpp"

using namespace radarpc;
using namespace radarpc::io;
using namespace radarpc::test;

namespace {

template <class F>
std::string error_of(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Golden, CubeBytesMatchReference) {
    const std::string ref = golden("cube.rdc");
    EXPECT_EQ(encode_cube(golden_cube()), ref);
    EXPECT_EQ(decode_cube(ref), golden_cube());
}

TEST(Golden, PointCloudBytesMatchReference) {
    const std::string ref = golden("cloud.rpc");
    EXPECT_EQ(encode_pointcloud(golden_cloud()), ref);
    EXPECT_EQ(decode_pointcloud(ref), golden_cloud());
}

TEST(Golden, GridBytesMatchReference) {
    const std::string ref = golden("grid.rog");
    EXPECT_EQ(encode_grid(golden_grid()), ref);
    EXPECT_EQ(decode_grid(ref), golden_grid());
}

TEST(Golden, ManifestMatchesReference) {
    const auto dir = test::scratch_dir("golden_manifest");
    write_manifest(dir / "manifest.json", golden_manifest());
    EXPECT_EQ(read_file(dir / "manifest.json"), golden("manifest.json"));
    EXPECT_EQ(manifest_from_json(parse_json(golden("manifest.json"))), golden_manifest());
}

TEST(Cube, RoundTripsThroughFiles) {
    const CellGeometry g = test::small_geometry();
    SceneSpec s = sample_scene(SceneSampler{}, g, 3);
    const auto c = render_radar_frame(s, g, 2);
    const auto p = test::scratch_dir("cube_rt") / "nested" / "c.rdc";
    write_cube(p, c);
    const auto back = read_cube(p);
    EXPECT_EQ(back, c);
    EXPECT_EQ(encode_cube(back), encode_cube(c));
}

TEST(Cube, TruncationReportsExpectedAndActualLength) {
    const std::string full = encode_cube(golden_cube());
    const std::string cut = full.substr(0, full.size() - 10);
    const std::string msg = error_of([&] { decode_cube(cut); });
    // payload starts after 6 + 48 + 16 header bytes: 96 bytes of float data expected, 86 present
    EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
    EXPECT_NE(msg.find("expected 96 bytes"), std::string::npos) << msg;
    EXPECT_NE(msg.find("found 86"), std::string::npos) << msg;
    EXPECT_THROW(decode_cube(cut), ParseError);
    EXPECT_THROW(decode_cube(full.substr(0, 3)), ParseError);
}

TEST(Cube, ZeroRangeBinsIsInvariantViolation) {
    std::string bytes = encode_cube(golden_cube());
    std::memset(bytes.data() + 6, 0, 4);  // range_bins
    try {
        decode_cube(bytes);
        FAIL() << "accepted zero range bins";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "geometry.range_bins");
        EXPECT_NE(std::string(e.what()).find("invariant violation in header at byte 6"), std::string::npos)
            << e.what();
    }
}

TEST(Cube, RejectsBadMagicVersionAndTrailingBytes) {
    std::string bytes = encode_cube(golden_cube());
    std::string bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_cube(bad), ParseError);
    bad = bytes;
    bad[4] = 2;
    EXPECT_NE(error_of([&] { decode_cube(bad); }).find("version 2"), std::string::npos);
    EXPECT_NE(error_of([&] { decode_cube(bytes + "x"); }).find("1 trailing bytes"), std::string::npos);
}

TEST(PointCloudFormat, RejectsUnsupportedFeatureCount) {
    std::string bytes = encode_pointcloud(golden_cloud());
    bytes[6] = 6;  // L
    try {
        decode_pointcloud(bytes);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 6u);
        EXPECT_NE(std::string(e.what()).find("L=6"), std::string::npos);
    }
}

TEST(PointCloudFormat, EmptyAndFourFeatureCloudsRoundTrip) {
    const PointCloud empty(4, 3);
    EXPECT_EQ(decode_pointcloud(encode_pointcloud(empty)), empty);
    EXPECT_EQ(encode_pointcloud(empty).size(), 4u + 2 + 2 + 8 + 8);
    Rng rng(1);
    const PointCloud c = test::random_cloud(500, rng);
    EXPECT_EQ(decode_pointcloud(encode_pointcloud(c)), c);
}

TEST(PointCloudFormat, HugePointCountIsTruncationNotAllocation) {
    std::string bytes = encode_pointcloud(golden_cloud());
    const std::uint64_t huge = 1ull << 60;
    std::memcpy(bytes.data() + 16, &huge, 8);
    EXPECT_THROW(decode_pointcloud(bytes), ParseError);
}

TEST(GridFormat, RandomRoundTrip) {
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto g = test::random_grid(test::tiny_geometry(1 + rng.below(7), 1 + rng.below(5), 1 + rng.below(5)), rng,
                                         rng.uniform());
        EXPECT_EQ(decode_grid(encode_grid(g)), g);
    }
}

TEST(GridFormat, RejectsNonZeroPadding) {
    std::string bytes = encode_grid(golden_grid());  // 12 voxels, 4 padding bits in the last byte
    bytes.back() = static_cast<char>(bytes.back() | 0x80);
    EXPECT_THROW(decode_grid(bytes), ParseError);
}

TEST(Json, GeometryRoundTripAndDefaults) {
    const CellGeometry g = test::small_geometry();
    EXPECT_EQ(geometry_from_json(geometry_to_json(g)), g);
    EXPECT_EQ(geometry_from_json(json::object()), CellGeometry::desk_default());
}

TEST(Json, UnknownKeysRejectedWithPath) {
    json j = geometry_to_json(test::small_geometry());
    j["range_binz"] = 3;
    EXPECT_NE(error_of([&] { geometry_from_json(j); }).find("geometry.range_binz: unknown field"), std::string::npos);
    json s = scene_to_json(sample_scene(SceneSampler{}, test::small_geometry(), 1));
    s["targets"][0]["colour"] = "red";
    EXPECT_NE(error_of([&] { scene_from_json(s); }).find("scene.targets[0].colour"), std::string::npos);
    EXPECT_THROW(cfar_from_json(json{{"variant", "CA"}, {"extra", 1}}), SchemaError);
}

TEST(Json, WrongTypesAndBadValuesRejected) {
    EXPECT_THROW(geometry_from_json(json{{"range_bins", "many"}}), SchemaError);
    EXPECT_THROW(geometry_from_json(json{{"range_bins", 0}}), ValidationError);
    EXPECT_THROW(scene_from_json(json{{"targets", json::array({json{{"half_extents", {1, 1, 1}}}})}}), SchemaError);
    EXPECT_THROW(scene_from_json(json::object()), SchemaError);
    EXPECT_THROW(cfar_from_json(json{{"variant", "median"}}), ValidationError);
    EXPECT_THROW(cfar_from_json(json{{"axis", "doppler"}}), SchemaError);
}

TEST(Json, ConfigsRoundTrip) {
    const SceneSpec s = sample_scene(SceneSampler{}, test::small_geometry(), 5);
    const SceneSpec back = scene_from_json(scene_to_json(s));
    EXPECT_EQ(scene_to_json(back), scene_to_json(s));
    CfarConfig c;
    c.variant = CfarVariant::OS;
    c.training_cells_per_side = 12;
    c.os_rank = 18;
    EXPECT_EQ(cfar_from_json(cfar_to_json(c)), c);
    nn::NetworkConfig n;
    n.temporal_layers = 4;
    n.backbone_blocks = 8;
    EXPECT_EQ(network_config_from_json(network_config_to_json(n)), n);
    nn::TrainConfig t;
    t.epochs = 3;
    t.learning_rate = 1e-4;
    EXPECT_EQ(train_config_from_json(train_config_to_json(t)), t);
}

TEST(Json, MalformedTextCarriesByteOffset) {
    try {
        parse_json("{\"a\": 1,, }", "cfg.json");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 9u);
        EXPECT_NE(std::string(e.what()).find("cfg.json"), std::string::npos);
    }
}

TEST(Checkpoint, PreservesInferenceBitExactly) {
    const CellGeometry g = test::small_geometry();
    nn::NetworkConfig nc;
    nc.temporal_layers = 2;
    nc.seed = 9;
    nn::Network net = nn::build_network(nc, g);
    Rng rng(3);
    for (auto& t : net.params.values)
        for (auto& v : t.data) v += rng.normal() * 0.01;
    const auto p = test::scratch_dir("ckpt") / "net.rck";
    write_checkpoint(p, net);
    const nn::Network back = read_checkpoint(p);
    EXPECT_EQ(back.config, net.config);
    EXPECT_EQ(back.geometry, net.geometry);
    EXPECT_EQ(back.params.values, net.params.values);

    const SceneSpec s = sample_scene(SceneSampler{}, g, 4);
    const auto frames = render_radar_frames(s, g);
    const std::vector<RadarCubePair> window(frames.begin(), frames.begin() + 3);
    EXPECT_EQ(nn::forward(back, window), nn::forward(net, window));
}

TEST(Checkpoint, CorruptionIsReported) {
    const nn::Network net = nn::build_network(nn::NetworkConfig{}, test::small_geometry());
    const std::string bytes = encode_checkpoint(net);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 1)), ParseError);
    EXPECT_THROW(decode_checkpoint(bytes + std::string(1, '\0')), ParseError);
    std::string renamed = bytes;
    const auto at = renamed.find("doppler.conv1.weight");
    ASSERT_NE(at, std::string::npos);
    renamed[at] = 'D';
    EXPECT_NE(error_of([&] { decode_checkpoint(renamed); }).find("expected tensor 'doppler.conv1.weight'"),
              std::string::npos);
}

TEST(Manifest, MissingDetectorNamesField) {
    json j = manifest_to_json(golden_manifest());
    j.erase("detector");
    try {
        manifest_from_json(j);
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.field(), "manifest.detector");
    }
    j = manifest_to_json(golden_manifest());
    j["detector"].erase("kind");
    try {
        manifest_from_json(j);
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.field(), "manifest.detector.kind");
    }
    for (const char* key : {"run_id", "scene_spec_hash", "geometry", "created_at", "tool_version"}) {
        j = manifest_to_json(golden_manifest());
        j.erase(key);
        EXPECT_THROW(manifest_from_json(j), SchemaError) << key;
    }
}

TEST(Manifest, RoundTrip) {
    const auto p = test::scratch_dir("manifest_rt") / "m.json";
    RunManifest m = golden_manifest();
    m.detector = json{{"kind", "network"}, {"checkpoint", "a/b.rck"}, {"checkpoint_hash", "00ff"}};
    write_manifest(p, m);
    EXPECT_EQ(read_manifest(p), m);
}

TEST(Hash, StableAndSensitive) {
    EXPECT_EQ(bytes_hash(""), "cbf29ce484222325");  // FNV-1a 64 offset basis
    EXPECT_EQ(bytes_hash("a"), "af63dc4c8601ec8c");
    EXPECT_NE(json_hash(json{{"a", 1}}), json_hash(json{{"a", 2}}));
}

TEST(Files, MissingFileIsIoError) {
    EXPECT_THROW(read_file("/nonexistent/radarpc/file.rdc"), IoError);
}
