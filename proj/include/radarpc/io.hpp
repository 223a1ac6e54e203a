#pragma once

// Persistence: little-endian binary formats for cubes, clouds, grids and
// checkpoints, and JSON documents for configurations and run manifests.
// Layouts are documented in docs/formats.md and pinned by golden files.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "radarpc/cfar.hpp"
#include "radarpc/cube.hpp"
#include "radarpc/grid.hpp"
#include "radarpc/nn/network.hpp"
#include "radarpc/nn/train.hpp"
#include "radarpc/util.hpp"

namespace radarpc::io {

using json = nlohmann::ordered_json;

inline constexpr std::uint16_t kFormatVersion = 1;

/// Malformed binary input. `offset` is the byte position where parsing failed.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : Error("parse error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A JSON document is missing a field or has one of the wrong type.
class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Little-endian byte streams

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.append(s); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

    const std::string& str() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    template <class U>
    void le(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw ParseError(pos_, std::string("truncated ") + what + ": expected " + std::to_string(n) +
                                       " bytes, found " + std::to_string(remaining()));
    }

    std::string_view bytes(std::size_t n, const char* what) {
        need(n, what);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(le<std::uint8_t>(what)); }
    std::uint16_t u16(const char* what) { return le<std::uint16_t>(what); }
    std::uint32_t u32(const char* what) { return le<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return le<std::uint64_t>(what); }
    float f32(const char* what) { return std::bit_cast<float>(le<std::uint32_t>(what)); }
    double f64(const char* what) { return std::bit_cast<double>(le<std::uint64_t>(what)); }

    void expect_end() const {
        if (remaining() != 0) throw ParseError(pos_, std::to_string(remaining()) + " trailing bytes");
    }

private:
    template <class U>
    U le(const char* what) {
        need(sizeof(U), what);
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
        pos_ += sizeof(U);
        return v;
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

namespace detail {

inline void write_magic(ByteWriter& w, std::string_view magic) {
    w.bytes(magic);
    w.u16(kFormatVersion);
}

inline void read_magic(ByteReader& r, std::string_view magic) {
    const auto got = r.bytes(4, "magic");
    if (got != magic) throw ParseError(0, "bad magic: expected '" + std::string(magic) + "'");
    const std::size_t at = r.offset();
    const auto version = r.u16("format version");
    if (version != kFormatVersion)
        throw ParseError(at, "unsupported format version " + std::to_string(version));
}

inline void write_geometry(ByteWriter& w, const CellGeometry& g) {
    w.u32(static_cast<std::uint32_t>(g.range_bins));
    w.u32(static_cast<std::uint32_t>(g.azimuth_bins));
    w.u32(static_cast<std::uint32_t>(g.elevation_bins));
    w.u32(static_cast<std::uint32_t>(g.doppler_bins));
    for (const Extent* e : {&g.range, &g.azimuth, &g.elevation, &g.doppler}) {
        w.f64(e->min);
        w.f64(e->max);
    }
}

inline CellGeometry read_geometry(ByteReader& r) {
    const std::size_t at = r.offset();
    CellGeometry g;
    g.range_bins = r.u32("range_bins");
    g.azimuth_bins = r.u32("azimuth_bins");
    g.elevation_bins = r.u32("elevation_bins");
    g.doppler_bins = r.u32("doppler_bins");
    for (Extent* e : {&g.range, &g.azimuth, &g.elevation, &g.doppler}) {
        e->min = r.f64("extent");
        e->max = r.f64("extent");
    }
    try {
        g.validate();
    } catch (const ValidationError& e) {
        const std::string detail = std::string(e.what()).substr(e.field().size() + 2);
        throw ValidationError(e.field(), "invariant violation in header at byte " + std::to_string(at) + ": " + detail);
    }
    return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Radar cubes: "RDC1" u16 version | geometry | u64 frame_id | f64 timestamp |
//              power f32[R*A*D] | elevation f32[R*A*D]

inline std::string encode_cube(const RadarCubePair& c) {
    c.validate();
    ByteWriter w;
    detail::write_magic(w, "RDC1");
    detail::write_geometry(w, c.geometry);
    w.u64(c.frame_id);
    w.f64(c.timestamp);
    for (float v : c.power) w.f32(v);
    for (float v : c.elevation) w.f32(v);
    return w.take();
}

inline RadarCubePair decode_cube(std::string_view bytes) {
    ByteReader r(bytes);
    detail::read_magic(r, "RDC1");
    RadarCubePair c;
    c.geometry = detail::read_geometry(r);
    c.frame_id = r.u64("frame_id");
    c.timestamp = r.f64("timestamp");
    const std::size_t n = c.geometry.cube_cells();
    r.need(8 * n, "tensor data");
    c.power.resize(n);
    c.elevation.resize(n);
    for (auto& v : c.power) v = r.f32("power");
    for (auto& v : c.elevation) v = r.f32("elevation");
    r.expect_end();
    return c;
}

inline void write_cube(const std::filesystem::path& p, const RadarCubePair& c) { write_file(p, encode_cube(c)); }
inline RadarCubePair read_cube(const std::filesystem::path& p) { return decode_cube(read_file(p)); }

// ---------------------------------------------------------------------------
// Point clouds: "RPC1" u16 version | u16 L | u64 frame_id | u64 N | f32[N*L]

inline std::string encode_pointcloud(const PointCloud& c) {
    c.validate();
    ByteWriter w;
    detail::write_magic(w, "RPC1");
    w.u16(static_cast<std::uint16_t>(c.features));
    w.u64(c.frame_id);
    w.u64(c.size());
    for (float v : c.data) w.f32(v);
    return w.take();
}

inline PointCloud decode_pointcloud(std::string_view bytes) {
    ByteReader r(bytes);
    detail::read_magic(r, "RPC1");
    const std::size_t at = r.offset();
    const std::size_t l = r.u16("feature count");
    if (l != 4 && l != 5) throw ParseError(at, "feature count L=" + std::to_string(l) + " not in {4,5}");
    PointCloud c(l);
    c.frame_id = r.u64("frame_id");
    const std::uint64_t n = r.u64("point count");
    if (n > r.remaining() / (4 * l)) r.need(static_cast<std::size_t>(std::min<std::uint64_t>(n * 4 * l, SIZE_MAX)), "point data");
    c.data.resize(static_cast<std::size_t>(n) * l);
    for (auto& v : c.data) v = r.f32("point data");
    r.expect_end();
    return c;
}

inline void write_pointcloud(const std::filesystem::path& p, const PointCloud& c) {
    write_file(p, encode_pointcloud(c));
}
inline PointCloud read_pointcloud(const std::filesystem::path& p) { return decode_pointcloud(read_file(p)); }

// ---------------------------------------------------------------------------
// Occupancy grids: "ROG1" u16 version | geometry | u64 frame_id |
//                  ceil(V/8) bytes, voxel v in bit (v % 8) of byte v / 8,
//                  voxels in (range, azimuth, elevation) range-major order

inline std::string encode_grid(const OccupancyGrid& g) {
    g.validate();
    ByteWriter w;
    detail::write_magic(w, "ROG1");
    detail::write_geometry(w, g.geometry);
    w.u64(g.frame_id);
    const std::size_t n = g.occupancy.size();
    for (std::size_t b = 0; b < (n + 7) / 8; ++b) {
        std::uint8_t byte = 0;
        for (std::size_t i = 0; i < 8 && 8 * b + i < n; ++i) byte |= static_cast<std::uint8_t>(g.occupancy[8 * b + i] << i);
        w.u8(byte);
    }
    return w.take();
}

inline OccupancyGrid decode_grid(std::string_view bytes) {
    ByteReader r(bytes);
    detail::read_magic(r, "ROG1");
    OccupancyGrid g(detail::read_geometry(r));
    g.frame_id = r.u64("frame_id");
    const std::size_t n = g.occupancy.size();
    r.need((n + 7) / 8, "packed voxels");
    for (std::size_t b = 0; b < (n + 7) / 8; ++b) {
        const std::size_t at = r.offset();
        const std::uint8_t byte = r.u8("packed voxels");
        for (std::size_t i = 0; i < 8; ++i) {
            const bool bit = (byte >> i) & 1;
            if (8 * b + i < n)
                g.occupancy[8 * b + i] = bit;
            else if (bit)
                throw ParseError(at, "non-zero padding bit");
        }
    }
    r.expect_end();
    return g;
}

inline void write_grid(const std::filesystem::path& p, const OccupancyGrid& g) { write_file(p, encode_grid(g)); }
inline OccupancyGrid read_grid(const std::filesystem::path& p) { return decode_grid(read_file(p)); }

// ---------------------------------------------------------------------------
// JSON field helpers

/// Reads an object's fields by name, rejecting unknown keys on finish().
class Fields {
public:
    Fields(const json& j, std::string context) : j_(j), ctx_(std::move(context)) {
        if (!j_.is_object()) throw SchemaError(ctx_, "expected a JSON object");
    }

    template <class T>
    void optional(const char* key, T& out) {
        seen_.push_back(key);
        if (!j_.contains(key)) return;
        read(key, out);
    }

    template <class T>
    void required(const char* key, T& out) {
        seen_.push_back(key);
        if (!j_.contains(key)) throw SchemaError(path(key), "missing required field");
        read(key, out);
    }

    const json* sub(const char* key, bool required_field) {
        seen_.push_back(key);
        if (!j_.contains(key)) {
            if (required_field) throw SchemaError(path(key), "missing required field");
            return nullptr;
        }
        return &j_.at(key);
    }

    std::string path(const char* key) const { return ctx_.empty() ? key : ctx_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
                throw SchemaError(path(it.key().c_str()), "unknown field");
    }

private:
    template <class T>
    void read(const char* key, T& out) {
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(path(key), std::string("wrong type: ") + e.what());
        }
    }

    const json& j_;
    std::string ctx_;
    std::vector<std::string> seen_;
};

inline json parse_json(std::string_view text, const std::string& source = "input") {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.byte, source + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CellGeometry (extents in radians for angles, meters and m/s otherwise)

inline json geometry_to_json(const CellGeometry& g) {
    return json{{"range_bins", g.range_bins},
                {"azimuth_bins", g.azimuth_bins},
                {"elevation_bins", g.elevation_bins},
                {"doppler_bins", g.doppler_bins},
                {"range_extent", {g.range.min, g.range.max}},
                {"azimuth_extent", {g.azimuth.min, g.azimuth.max}},
                {"elevation_extent", {g.elevation.min, g.elevation.max}},
                {"doppler_extent", {g.doppler.min, g.doppler.max}}};
}

inline CellGeometry geometry_from_json(const json& j, const std::string& ctx = "geometry") {
    CellGeometry g;
    Fields f(j, ctx);
    f.optional("range_bins", g.range_bins);
    f.optional("azimuth_bins", g.azimuth_bins);
    f.optional("elevation_bins", g.elevation_bins);
    f.optional("doppler_bins", g.doppler_bins);
    auto ext = [&](const char* key, Extent& e) {
        std::array<double, 2> v{e.min, e.max};
        f.optional(key, v);
        e = {v[0], v[1]};
    };
    ext("range_extent", g.range);
    ext("azimuth_extent", g.azimuth);
    ext("elevation_extent", g.elevation);
    ext("doppler_extent", g.doppler);
    f.finish();
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// SceneSpec

inline json scene_to_json(const SceneSpec& s) {
    json targets = json::array();
    for (const auto& t : s.targets)
        targets.push_back({{"center", {t.center.x, t.center.y, t.center.z}},
                           {"half_extents", {t.half_extents.x, t.half_extents.y, t.half_extents.z}},
                           {"radial_velocity", t.radial_velocity},
                           {"reflectivity", t.reflectivity},
                           {"surface_point_density", t.surface_point_density},
                           {"flicker_probability", t.flicker_probability}});
    return json{{"targets", targets},
                {"noise_mean_power", s.noise_mean_power},
                {"seed", s.seed},
                {"frame_count", s.frame_count},
                {"frame_interval", s.frame_interval},
                {"ego_velocity", s.ego_velocity}};
}

inline SceneSpec scene_from_json(const json& j) {
    SceneSpec s;
    Fields f(j, "scene");
    if (const json* ts = f.sub("targets", true)) {
        if (!ts->is_array()) throw SchemaError("scene.targets", "expected an array");
        for (std::size_t i = 0; i < ts->size(); ++i) {
            Target t;
            Fields tf((*ts)[i], "scene.targets[" + std::to_string(i) + "]");
            std::array<double, 3> c{}, h{};
            tf.required("center", c);
            tf.optional("half_extents", h);
            t.center = {c[0], c[1], c[2]};
            t.half_extents = {h[0], h[1], h[2]};
            tf.optional("radial_velocity", t.radial_velocity);
            tf.optional("reflectivity", t.reflectivity);
            tf.optional("surface_point_density", t.surface_point_density);
            tf.optional("flicker_probability", t.flicker_probability);
            tf.finish();
            s.targets.push_back(t);
        }
    }
    f.optional("noise_mean_power", s.noise_mean_power);
    f.optional("seed", s.seed);
    f.optional("frame_count", s.frame_count);
    f.optional("frame_interval", s.frame_interval);
    f.optional("ego_velocity", s.ego_velocity);
    f.finish();
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// CfarConfig

inline json cfar_to_json(const CfarConfig& c) {
    return json{{"variant", to_string(c.variant)},
                {"training_cells_per_side", c.training_cells_per_side},
                {"guard_cells_per_side", c.guard_cells_per_side},
                {"target_pfa", c.target_pfa},
                {"os_rank", c.os_rank},
                {"axis", axis_name(c.axis)},
                {"calibration_seed", c.calibration_seed}};
}

inline CfarConfig cfar_from_json(const json& j) {
    CfarConfig c;
    Fields f(j, "cfar");
    std::string variant = to_string(c.variant), axis = axis_name(c.axis);
    f.optional("variant", variant);
    c.variant = parse_cfar_variant(variant);
    f.optional("training_cells_per_side", c.training_cells_per_side);
    f.optional("guard_cells_per_side", c.guard_cells_per_side);
    f.optional("target_pfa", c.target_pfa);
    f.optional("os_rank", c.os_rank);
    f.optional("axis", axis);
    if (axis != "range") throw SchemaError("cfar.axis", "only 'range' is supported");
    f.optional("calibration_seed", c.calibration_seed);
    f.finish();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// NetworkConfig / TrainConfig

inline json network_config_to_json(const nn::NetworkConfig& c) {
    return json{{"backbone_blocks", c.backbone_blocks},   {"base_channels", c.base_channels},
                {"temporal_layers", c.temporal_layers},   {"temporal_window", c.temporal_window},
                {"groupnorm_groups", c.groupnorm_groups}, {"temporal_channels", c.temporal_channels},
                {"seed", c.seed}};
}

inline nn::NetworkConfig network_config_from_json(const json& j) {
    nn::NetworkConfig c;
    Fields f(j, "network");
    f.optional("backbone_blocks", c.backbone_blocks);
    f.optional("base_channels", c.base_channels);
    f.optional("temporal_layers", c.temporal_layers);
    f.optional("temporal_window", c.temporal_window);
    f.optional("groupnorm_groups", c.groupnorm_groups);
    f.optional("temporal_channels", c.temporal_channels);
    f.optional("seed", c.seed);
    f.finish();
    c.validate();
    return c;
}

inline json train_config_to_json(const nn::TrainConfig& c) {
    return json{{"alpha", c.alpha},
                {"gamma", c.gamma},
                {"l1_coeff", c.l1_coeff},
                {"l2_coeff", c.l2_coeff},
                {"micro_batch", c.micro_batch},
                {"effective_batch", c.effective_batch},
                {"learning_rate", c.learning_rate},
                {"lr_decay", c.lr_decay},
                {"epochs", c.epochs},
                {"seed", c.seed},
                {"beta1", c.beta1},
                {"beta2", c.beta2}};
}

inline nn::TrainConfig train_config_from_json(const json& j) {
    nn::TrainConfig c;
    Fields f(j, "train");
    f.optional("alpha", c.alpha);
    f.optional("gamma", c.gamma);
    f.optional("l1_coeff", c.l1_coeff);
    f.optional("l2_coeff", c.l2_coeff);
    f.optional("micro_batch", c.micro_batch);
    f.optional("effective_batch", c.effective_batch);
    f.optional("learning_rate", c.learning_rate);
    f.optional("lr_decay", c.lr_decay);
    f.optional("epochs", c.epochs);
    f.optional("seed", c.seed);
    f.optional("beta1", c.beta1);
    f.optional("beta2", c.beta2);
    f.finish();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Checkpoints: "RCK1" u16 version | u32 len | JSON {network, geometry} |
//              u32 tensor count | per tensor: u16 name length, name bytes,
//              u8 rank, u32 dims[rank], f64 values

inline std::string encode_checkpoint(const nn::Network& net) {
    ByteWriter w;
    detail::write_magic(w, "RCK1");
    const std::string header =
        json{{"network", network_config_to_json(net.config)}, {"geometry", geometry_to_json(net.geometry)}}.dump();
    w.u32(static_cast<std::uint32_t>(header.size()));
    w.bytes(header);
    const auto& ps = net.params;
    w.u32(static_cast<std::uint32_t>(ps.values.size()));
    for (std::size_t i = 0; i < ps.values.size(); ++i) {
        w.u16(static_cast<std::uint16_t>(ps.names[i].size()));
        w.bytes(ps.names[i]);
        const auto& t = ps.values[i];
        w.u8(static_cast<std::uint8_t>(t.shape.size()));
        for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
        for (double v : t.data) w.f64(v);
    }
    return w.take();
}

inline nn::Network decode_checkpoint(std::string_view bytes) {
    ByteReader r(bytes);
    detail::read_magic(r, "RCK1");
    const std::uint32_t len = r.u32("header length");
    const std::size_t header_at = r.offset();
    const json header = parse_json(r.bytes(len, "header"), "checkpoint header");
    Fields f(header, "checkpoint");
    const json* netj = f.sub("network", true);
    const json* geoj = f.sub("geometry", true);
    f.finish();
    nn::Network net;
    try {
        net = nn::build_network(network_config_from_json(*netj), geometry_from_json(*geoj));
    } catch (const ValidationError& e) {
        throw ParseError(header_at, std::string("invalid checkpoint header: ") + e.what());
    }
    const std::size_t count_at = r.offset();
    const std::uint32_t count = r.u32("tensor count");
    if (count != net.params.values.size())
        throw ParseError(count_at, "expected " + std::to_string(net.params.values.size()) + " tensors, found " +
                                       std::to_string(count));
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = r.offset();
        const std::uint16_t nlen = r.u16("tensor name length");
        const std::string name(r.bytes(nlen, "tensor name"));
        if (name != net.params.names[i])
            throw ParseError(at, "expected tensor '" + net.params.names[i] + "', found '" + name + "'");
        const std::uint8_t rank = r.u8("tensor rank");
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.u32("tensor dims");
        nn::Tensor& t = net.params.values[i];
        if (shape != t.shape)
            throw ParseError(at, "tensor '" + name + "' has shape " + nn::shape_string(shape) + ", expected " +
                                     nn::shape_string(t.shape));
        r.need(8 * t.size(), "tensor values");
        for (auto& v : t.data) v = r.f64("tensor values");
    }
    r.expect_end();
    return net;
}

inline void write_checkpoint(const std::filesystem::path& p, const nn::Network& net) {
    write_file(p, encode_checkpoint(net));
}
inline nn::Network read_checkpoint(const std::filesystem::path& p) { return decode_checkpoint(read_file(p)); }

// ---------------------------------------------------------------------------
// Run manifests

struct RunManifest {
    std::string run_id;
    std::string scene_spec_hash;
    json detector;  // {"kind": "cfar", "config": {...}} | {"kind": "network", "checkpoint": ..., "checkpoint_hash": ...}
                    // | {"kind": "ground_truth"}
    CellGeometry geometry;
    std::string created_at;
    std::string tool_version;

    bool operator==(const RunManifest& o) const {
        return run_id == o.run_id && scene_spec_hash == o.scene_spec_hash && detector == o.detector &&
               geometry == o.geometry && created_at == o.created_at && tool_version == o.tool_version;
    }
};

inline json manifest_to_json(const RunManifest& m) {
    return json{{"run_id", m.run_id},
                {"scene_spec_hash", m.scene_spec_hash},
                {"detector", m.detector},
                {"geometry", geometry_to_json(m.geometry)},
                {"created_at", m.created_at},
                {"tool_version", m.tool_version}};
}

inline RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    Fields f(j, "manifest");
    f.required("run_id", m.run_id);
    f.required("scene_spec_hash", m.scene_spec_hash);
    const json* det = f.sub("detector", true);
    if (!det->is_object() || !det->contains("kind") || !(*det)["kind"].is_string())
        throw SchemaError("manifest.detector.kind", "missing required field");
    m.detector = *det;
    m.geometry = geometry_from_json(*f.sub("geometry", true), "manifest.geometry");
    f.required("created_at", m.created_at);
    f.required("tool_version", m.tool_version);
    f.finish();
    return m;
}

inline void write_manifest(const std::filesystem::path& p, const RunManifest& m) {
    write_file(p, manifest_to_json(m).dump(2) + "\n");
}
inline RunManifest read_manifest(const std::filesystem::path& p) {
    return manifest_from_json(parse_json(read_file(p), p.string()));
}

/// Hash of a JSON document's canonical (compact, key-ordered as written) form.
inline std::string json_hash(const json& j) { return to_hex(fnv1a64(j.dump())); }

inline std::string bytes_hash(std::string_view bytes) { return to_hex(fnv1a64(bytes)); }

}  // namespace radarpc::io
