#pragma once

// Command-line front end: generate | cfar | train | infer | eval | sweep | report.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.
//
// Dataset directory layout (written by generate, read by the others):
//   geometry.json          CellGeometry
//   scenes/NNN.json        one SceneSpec per sequence
//   cubes/sNNN_fFFFFFF.rdc radar cube pairs
//   gt/sNNN_fFFFFFF.rpc    ground-truth clouds (L = 4)
//   gt/sNNN_fFFFFFF.rog    ground-truth occupancy grids
//   frames.csv             per-frame summary
//   manifest.json          RunManifest

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "radarpc/cfar.hpp"
#include "radarpc/cube.hpp"
#include "radarpc/io.hpp"
#include "radarpc/metrics.hpp"
#include "radarpc/nn/network.hpp"
#include "radarpc/nn/train.hpp"
#include "radarpc/report.hpp"
#include "radarpc/util.hpp"

#ifndef RADARPC_VERSION
#define RADARPC_VERSION "0.1.0"
#endif

namespace radarpc::cli {

namespace fs = std::filesystem;
using io::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags, malformed or invalid user-supplied configuration.
class UsageError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Shared helpers

/// ISO-8601 UTC time from SOURCE_DATE_EPOCH (default 0) so outputs are reproducible.
inline std::string created_at() {
    std::time_t t = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string frame_stem(std::size_t sequence, std::size_t frame) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "s%03zu_f%06zu", sequence, frame);
    return buf;
}

inline void require_path(const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw io::IoError(std::string(what) + " not found: " + p.string());
}

/// Loads a user-supplied JSON document; syntax or schema problems are usage errors.
template <class Fn>
auto load_config(const fs::path& path, Fn&& parse) {
    require_path(path, "config");
    try {
        return parse(io::parse_json(io::read_file(path), path.string()));
    } catch (const io::ParseError& e) {
        throw UsageError(e.what());
    } catch (const ValidationError& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

inline io::RunManifest make_manifest(const std::string& command, const json& run_key, const std::string& scene_hash,
                                     json detector, const CellGeometry& g) {
    io::RunManifest m;
    m.run_id = command + "-" + io::json_hash(run_key);
    m.scene_spec_hash = scene_hash;
    m.detector = std::move(detector);
    m.geometry = g;
    m.created_at = created_at();
    m.tool_version = RADARPC_VERSION;
    return m;
}

// ---------------------------------------------------------------------------
// Datasets

struct LoadedSequence {
    nn::Sequence data;
    std::vector<std::string> stems;
};

struct LoadedDataset {
    fs::path root;
    CellGeometry geometry;
    std::vector<SceneSpec> scenes;
    std::string scene_hash;
    std::vector<LoadedSequence> sequences;

    std::size_t frame_count() const {
        std::size_t n = 0;
        for (const auto& s : sequences) n += s.stems.size();
        return n;
    }
};

inline std::string scenes_hash(const std::vector<SceneSpec>& scenes) {
    json all = json::array();
    for (const auto& s : scenes) all.push_back(io::scene_to_json(s));
    return io::json_hash(all);
}

inline LoadedDataset load_dataset(const fs::path& root) {
    require_path(root, "dataset directory");
    LoadedDataset ds;
    ds.root = root;
    ds.geometry = io::geometry_from_json(io::parse_json(io::read_file(root / "geometry.json"), "geometry.json"));
    require_path(root / "scenes", "dataset scenes directory");
    std::vector<fs::path> scene_files;
    for (const auto& e : fs::directory_iterator(root / "scenes"))
        if (e.path().extension() == ".json") scene_files.push_back(e.path());
    std::sort(scene_files.begin(), scene_files.end());
    if (scene_files.empty()) throw io::IoError("no scenes in " + (root / "scenes").string());
    for (std::size_t s = 0; s < scene_files.size(); ++s) {
        ds.scenes.push_back(io::scene_from_json(io::parse_json(io::read_file(scene_files[s]), scene_files[s].string())));
        LoadedSequence seq;
        const std::size_t n = ds.scenes.back().frame_count;
        seq.data.frames.resize(n, RadarCubePair(ds.geometry));
        seq.data.truth.resize(n, OccupancyGrid(ds.geometry));
        for (std::size_t f = 0; f < n; ++f) seq.stems.push_back(frame_stem(s, f));
        parallel_for(n, [&](std::size_t f) {
            const auto cube_path = root / "cubes" / (seq.stems[f] + ".rdc");
            const auto grid_path = root / "gt" / (seq.stems[f] + ".rog");
            require_path(cube_path, "cube");
            require_path(grid_path, "ground-truth grid");
            seq.data.frames[f] = io::read_cube(cube_path);
            seq.data.truth[f] = io::read_grid(grid_path);
            if (!(seq.data.frames[f].geometry == ds.geometry) || !(seq.data.truth[f].geometry == ds.geometry))
                throw ValidationError("geometry", "frame " + seq.stems[f] + " does not match geometry.json");
        });
        ds.sequences.push_back(std::move(seq));
    }
    ds.scene_hash = scenes_hash(ds.scenes);
    return ds;
}

enum class Split { All, Train, Test };

inline Split parse_split(const std::string& s) {
    if (s == "all") return Split::All;
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw UsageError("--split must be all, train or test");
}

/// Frames in sequence-major order; the first `fraction` of them form the
/// training split and the rest the test split. A sequence cut by the
/// boundary becomes two sequences.
inline std::vector<LoadedSequence> select(const LoadedDataset& ds, Split split, double fraction) {
    if (split == Split::All) return ds.sequences;
    if (!(fraction > 0.0 && fraction < 1.0)) throw UsageError("--train-fraction must be in (0,1)");
    const std::size_t total = ds.frame_count();
    const auto cut = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(total)));
    if (cut == 0 || cut == total)
        throw UsageError("train fraction leaves an empty split (" + std::to_string(total) + " frames)");
    std::vector<LoadedSequence> out;
    std::size_t index = 0;
    for (const auto& seq : ds.sequences) {
        LoadedSequence part;
        for (std::size_t f = 0; f < seq.stems.size(); ++f, ++index) {
            if ((index < cut) != (split == Split::Train)) continue;
            part.data.frames.push_back(seq.data.frames[f]);
            part.data.truth.push_back(seq.data.truth[f]);
            part.stems.push_back(seq.stems[f]);
        }
        if (!part.stems.empty()) out.push_back(std::move(part));
    }
    return out;
}

inline nn::Dataset as_dataset(const std::vector<LoadedSequence>& seqs) {
    nn::Dataset d;
    for (const auto& s : seqs) d.sequences.push_back(s.data);
    return d;
}

struct Predictions {
    std::vector<OccupancyGrid> grids;
    std::vector<OccupancyGrid> truth;
    std::vector<std::string> stems;
};

inline Predictions infer_all(const nn::Network& net, const std::vector<LoadedSequence>& seqs) {
    Predictions p;
    for (const auto& s : seqs) {
        auto r = nn::infer(net, s.data.frames);
        for (std::size_t i = 0; i < r.grids.size(); ++i) {
            r.grids[i].frame_id = s.data.truth[i].frame_id;
            p.grids.push_back(std::move(r.grids[i]));
            p.truth.push_back(s.data.truth[i]);
            p.stems.push_back(s.stems[i]);
        }
    }
    return p;
}

inline void write_predictions(const fs::path& dir, const Predictions& p) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < p.grids.size(); ++i) {
        io::write_grid(dir / (p.stems[i] + ".rog"), p.grids[i]);
        PointCloud c = grid_to_pointcloud(p.grids[i]);
        c.frame_id = p.grids[i].frame_id;
        io::write_pointcloud(dir / (p.stems[i] + ".rpc"), c);
    }
}

inline void write_report(const fs::path& dir, const MetricsReport& r) {
    io::write_file(dir / "report.csv", report::metrics_csv(r));
    io::write_file(dir / "report.json", report::metrics_json(r).dump(2) + "\n");
}

inline std::string summary(const MetricsReport& r) {
    auto show = [](const std::optional<double>& v) { return v ? report::fmt(*v) : std::string("n/a"); };
    return "frames=" + std::to_string(r.per_frame.size()) + " pd=" + show(r.mean_pd) + " pfa=" + show(r.mean_pfa) +
           " bcd=" + show(r.mean_bcd) + " empty_frame_fraction=" + report::fmt(r.empty_frame_fraction);
}

// ---------------------------------------------------------------------------
// Commands

struct Context {
    std::ostream& out;
    std::ostream& err;
};

struct GenerateArgs {
    std::string scene, geometry, out_dir;
    std::optional<std::size_t> frames;
    std::size_t scenes = 1;
    double flicker = 0.0;
    std::optional<std::uint64_t> seed;
};

inline int cmd_generate(const GenerateArgs& a, Context& ctx) {
    const CellGeometry g = a.geometry.empty() ? CellGeometry::desk_default()
                                              : load_config(a.geometry, [](const json& j) { return io::geometry_from_json(j); });
    std::vector<SceneSpec> scenes;
    if (!a.scene.empty()) {
        if (a.scenes != 1) throw UsageError("--scenes cannot be combined with --scene");
        SceneSpec s = load_config(a.scene, [](const json& j) { return io::scene_from_json(j); });
        if (a.seed) s.seed = *a.seed;
        if (a.frames) s.frame_count = *a.frames;
        scenes.push_back(s);
    } else {
        if (a.scenes < 1) throw UsageError("--scenes must be >= 1");
        SceneSampler sampler;
        sampler.flicker_probability = a.flicker;
        if (a.frames) sampler.frame_count = *a.frames;
        for (std::size_t i = 0; i < a.scenes; ++i) scenes.push_back(sample_scene(sampler, g, derive_seed(a.seed.value_or(0), {i})));
    }
    for (auto& s : scenes) {
        try {
            s.validate();
        } catch (const ValidationError& e) {
            throw UsageError(std::string("invalid scene: ") + e.what());
        }
    }

    const fs::path root = a.out_dir;
    fs::create_directories(root / "cubes");
    fs::create_directories(root / "gt");
    fs::create_directories(root / "scenes");
    io::write_file(root / "geometry.json", io::geometry_to_json(g).dump(2) + "\n");

    std::string frames_csv = report::csv_header_line("frames");
    frames_csv += "frame_id,sequence,frame,timestamp,gt_points,gt_voxels,cube_hash\n";
    std::uint64_t frame_id = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        char name[16];
        std::snprintf(name, sizeof name, "%03zu.json", s);
        io::write_file(root / "scenes" / name, io::scene_to_json(scenes[s]).dump(2) + "\n");
        auto cubes = render_radar_frames(scenes[s], g);
        auto truth = render_ground_truth(scenes[s], g);
        std::vector<std::string> hashes(cubes.size());
        parallel_for(cubes.size(), [&](std::size_t f) {
            const std::string stem = frame_stem(s, f);
            cubes[f].frame_id = truth[f].cloud.frame_id = truth[f].grid.frame_id = frame_id + f;
            const std::string bytes = io::encode_cube(cubes[f]);
            hashes[f] = io::bytes_hash(bytes);
            io::write_file(root / "cubes" / (stem + ".rdc"), bytes);
            io::write_pointcloud(root / "gt" / (stem + ".rpc"), truth[f].cloud);
            io::write_grid(root / "gt" / (stem + ".rog"), truth[f].grid);
        });
        for (std::size_t f = 0; f < cubes.size(); ++f)
            frames_csv += std::to_string(frame_id + f) + "," + std::to_string(s) + "," + std::to_string(f) + "," +
                          report::fmt(cubes[f].timestamp) + "," + std::to_string(truth[f].cloud.size()) + "," +
                          std::to_string(truth[f].grid.occupied_count()) + "," + hashes[f] + "\n";
        frame_id += cubes.size();
    }
    io::write_file(root / "frames.csv", frames_csv);
    const std::string hash = scenes_hash(scenes);
    io::write_manifest(root / "manifest.json",
                       make_manifest("generate", json{{"scenes", hash}, {"geometry", io::geometry_to_json(g)}}, hash,
                                     json{{"kind", "ground_truth"}}, g));
    ctx.out << "generated " << frame_id << " frames in " << scenes.size() << " sequence(s) -> " << root.string() << "\n";
    return kExitOk;
}

struct CfarArgs {
    std::string dataset, config, variant, out_dir, split = "all";
    std::optional<double> pfa;
    double train_fraction = 0.8;
    std::optional<std::uint64_t> seed;
};

inline int cmd_cfar(const CfarArgs& a, Context& ctx) {
    CfarConfig cfg = a.config.empty() ? CfarConfig{} : load_config(a.config, [](const json& j) { return io::cfar_from_json(j); });
    try {
        if (!a.variant.empty()) cfg.variant = parse_cfar_variant(a.variant);
        if (a.pfa) cfg.target_pfa = *a.pfa;
        if (a.seed) cfg.calibration_seed = *a.seed;
        cfg.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    const Split split = parse_split(a.split);
    const LoadedDataset ds = load_dataset(a.dataset);
    const auto seqs = select(ds, split, a.train_fraction);

    Predictions p;
    std::size_t cells = 0, hits = 0;
    for (const auto& s : seqs) {
        const std::size_t base = p.grids.size();
        p.grids.resize(base + s.stems.size(), OccupancyGrid(ds.geometry));
        std::vector<std::size_t> per(s.stems.size());
        std::vector<PointCloud> clouds(s.stems.size());
        parallel_for(s.stems.size(), [&](std::size_t f) {
            CfarDetections d = cfar_detect_detailed(s.data.frames[f], cfg);
            d.grid.frame_id = s.data.truth[f].frame_id;
            per[f] = d.cell_detections;
            clouds[f] = grid_to_pointcloud(d.grid, std::span<const float>(d.doppler), std::span<const float>(d.power));
            clouds[f].frame_id = d.grid.frame_id;
            p.grids[base + f] = std::move(d.grid);
        });
        for (std::size_t f = 0; f < s.stems.size(); ++f) {
            hits += per[f];
            cells += ds.geometry.cube_cells();
            p.truth.push_back(s.data.truth[f]);
            p.stems.push_back(s.stems[f]);
            io::write_pointcloud(fs::path(a.out_dir) / "pred" / (s.stems[f] + ".rpc"), clouds[f]);
            io::write_grid(fs::path(a.out_dir) / "pred" / (s.stems[f] + ".rog"), p.grids[base + f]);
        }
    }
    const json cfg_json = io::cfar_to_json(cfg);
    const std::string detector = std::string("cfar-") + to_string(cfg.variant);
    MetricsReport r = evaluate_run(p.grids, p.truth, ds.geometry, detector, io::json_hash(cfg_json));
    const fs::path out = a.out_dir;
    write_report(out, r);
    io::write_file(out / "cfar.json", cfg_json.dump(2) + "\n");
    io::write_manifest(out / "manifest.json",
                       make_manifest("cfar", json{{"config", cfg_json}, {"scenes", ds.scene_hash}, {"split", a.split}},
                                     ds.scene_hash, json{{"kind", "cfar"}, {"config", cfg_json}}, ds.geometry));
    const double rate = cells ? static_cast<double>(hits) / static_cast<double>(cells) : 0.0;
    ctx.out << detector << ": " << summary(r) << " cell_detection_rate=" << report::fmt(rate) << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string dataset, train_cfg, network_cfg, out_dir, split = "all";
    std::optional<std::size_t> backbone, temporal, channels, epochs;
    std::optional<double> lr;
    double train_fraction = 0.8;
    std::optional<std::uint64_t> seed;
};

inline nn::TrainConfig resolve_train_config(const std::string& path, std::optional<std::size_t> epochs,
                                            std::optional<double> lr, std::optional<std::uint64_t> seed) {
    nn::TrainConfig t = path.empty() ? nn::TrainConfig{}
                                     : load_config(path, [](const json& j) { return io::train_config_from_json(j); });
    if (epochs) t.epochs = *epochs;
    if (lr) t.learning_rate = *lr;
    if (seed) t.seed = *seed;
    try {
        t.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    return t;
}

inline int cmd_train(const TrainArgs& a, Context& ctx) {
    const nn::TrainConfig tc = resolve_train_config(a.train_cfg, a.epochs, a.lr, a.seed);
    nn::NetworkConfig nc = a.network_cfg.empty()
                               ? nn::NetworkConfig{}
                               : load_config(a.network_cfg, [](const json& j) { return io::network_config_from_json(j); });
    if (a.backbone) nc.backbone_blocks = *a.backbone;
    if (a.temporal) nc.temporal_layers = *a.temporal;
    if (a.channels) nc.base_channels = *a.channels;
    if (a.seed) nc.seed = *a.seed;
    try {
        nc.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    const Split split = parse_split(a.split);
    const LoadedDataset ds = load_dataset(a.dataset);
    const auto seqs = select(ds, split, a.train_fraction);

    auto result = nn::train(nn::build_network(nc, ds.geometry), as_dataset(seqs), tc);
    const fs::path out = a.out_dir;
    const std::string ckpt = io::encode_checkpoint(result.network);
    io::write_file(out / "checkpoint.rck", ckpt);
    io::write_file(out / "history.csv", report::history_csv(result.history));
    io::write_file(out / "train.json", io::train_config_to_json(tc).dump(2) + "\n");
    const json key{{"train", io::train_config_to_json(tc)},
                   {"network", io::network_config_to_json(nc)},
                   {"scenes", ds.scene_hash},
                   {"split", a.split}};
    io::write_manifest(out / "manifest.json",
                       make_manifest("train", key, ds.scene_hash,
                                     json{{"kind", "network"},
                                          {"checkpoint", "checkpoint.rck"},
                                          {"checkpoint_hash", io::bytes_hash(ckpt)},
                                          {"config", io::network_config_to_json(nc)}},
                                     ds.geometry));
    const auto& first = result.history.front();
    const auto& last = result.history.back();
    ctx.out << "trained " << result.network.params.scalar_count() << " parameters for " << tc.epochs
            << " epochs: focal " << report::fmt(first.train_focal) << " -> " << report::fmt(last.train_focal) << "\n";
    return kExitOk;
}

struct InferArgs {
    std::string checkpoint, dataset, out_dir, split = "all";
    double train_fraction = 0.8;
    std::optional<std::uint64_t> seed;
};

inline int cmd_infer(const InferArgs& a, Context& ctx) {
    require_path(a.checkpoint, "checkpoint");
    const std::string bytes = io::read_file(a.checkpoint);
    const nn::Network net = io::decode_checkpoint(bytes);
    const Split split = parse_split(a.split);
    const LoadedDataset ds = load_dataset(a.dataset);
    if (!(ds.geometry == net.geometry)) throw ValidationError("geometry", "checkpoint geometry differs from the dataset");
    const Predictions p = infer_all(net, select(ds, split, a.train_fraction));
    const fs::path out = a.out_dir;
    write_predictions(out / "pred", p);
    const std::string hash = io::bytes_hash(bytes);
    MetricsReport r = evaluate_run(p.grids, p.truth, ds.geometry, "network", hash);
    write_report(out, r);
    io::write_manifest(out / "manifest.json",
                       make_manifest("infer", json{{"checkpoint", hash}, {"scenes", ds.scene_hash}, {"split", a.split}},
                                     ds.scene_hash,
                                     json{{"kind", "network"},
                                          {"checkpoint", fs::absolute(a.checkpoint).lexically_normal().string()},
                                          {"checkpoint_hash", hash}},
                                     ds.geometry));
    ctx.out << "network: " << summary(r) << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string pred_dir, gt_dir, out, out_dir;
    std::optional<std::uint64_t> seed;
};

inline int cmd_eval(const EvalArgs& a, Context& ctx) {
    require_path(a.pred_dir, "prediction directory");
    require_path(a.gt_dir, "ground-truth directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a.pred_dir))
        if (e.path().extension() == ".rog") files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw io::IoError("no .rog grids in " + a.pred_dir);
    std::vector<OccupancyGrid> pred(files.size(), OccupancyGrid(CellGeometry{})), gt = pred;
    parallel_for(files.size(), [&](std::size_t i) {
        const fs::path g = fs::path(a.gt_dir) / files[i];
        require_path(g, "ground-truth grid");
        pred[i] = io::read_grid(fs::path(a.pred_dir) / files[i]);
        gt[i] = io::read_grid(g);
    });
    MetricsReport r = evaluate_run(pred, gt, gt.front().geometry, "eval:" + fs::path(a.pred_dir).filename().string());
    const fs::path csv = a.out.empty() ? fs::path(a.out_dir) / "report.csv" : fs::path(a.out);
    io::write_file(csv, report::metrics_csv(r));
    fs::path json_path = csv;
    json_path.replace_extension(".json");
    io::write_file(json_path, report::metrics_json(r).dump(2) + "\n");
    ctx.out << "eval: " << summary(r) << "\n";
    return kExitOk;
}

struct SweepArgs {
    std::string dataset, train_cfg, out_dir;
    std::vector<std::size_t> backbones{2, 4, 8, 12};
    std::vector<std::size_t> temporal{0, 2, 4, 6};
    std::size_t channels = 8;
    std::optional<std::size_t> epochs;
    double train_fraction = 0.8;
    std::optional<std::uint64_t> seed;
};

inline int cmd_sweep(const SweepArgs& a, Context& ctx) {
    const nn::TrainConfig tc = resolve_train_config(a.train_cfg, a.epochs, std::nullopt, a.seed);
    if (a.backbones.empty() || a.temporal.empty()) throw UsageError("--backbones and --temporal must be non-empty");
    const LoadedDataset ds = load_dataset(a.dataset);
    const auto train_set = as_dataset(select(ds, Split::Train, a.train_fraction));
    const auto test_seqs = select(ds, Split::Test, a.train_fraction);

    std::vector<report::SweepCell> cells;
    for (auto k : a.temporal)
        for (auto b : a.backbones) {
            report::SweepCell c;
            c.backbone_blocks = b;
            c.temporal_layers = k;
            cells.push_back(c);
        }
    report::sort_cells(cells);
    const fs::path out = a.out_dir;
    parallel_for(cells.size(), [&](std::size_t i) {
        auto& c = cells[i];
        try {
            nn::NetworkConfig nc;
            nc.backbone_blocks = c.backbone_blocks;
            nc.temporal_layers = c.temporal_layers;
            nc.base_channels = a.channels;
            nc.seed = tc.seed;
            nc.validate();
            auto result = nn::train(nn::build_network(nc, ds.geometry), train_set, tc);
            const Predictions p = infer_all(result.network, test_seqs);
            const std::string ckpt = io::encode_checkpoint(result.network);
            MetricsReport r = evaluate_run(p.grids, p.truth, ds.geometry, "network", io::bytes_hash(ckpt));
            const fs::path dir = out / "cells" / ("B" + std::to_string(c.backbone_blocks) + "_K" + std::to_string(c.temporal_layers));
            io::write_file(dir / "checkpoint.rck", ckpt);
            io::write_file(dir / "history.csv", report::history_csv(result.history));
            write_report(dir, r);
            c.ok = true;
            c.pd = r.mean_pd;
            c.pfa = r.mean_pfa;
            c.bcd = r.mean_bcd;
            c.empty_frame_fraction = r.empty_frame_fraction;
            c.parameters = result.network.params.scalar_count();
            c.final_train_focal = result.history.back().train_focal;
        } catch (const std::exception& e) {
            c.ok = false;
            c.error = e.what();
        }
    });
    io::write_file(out / "sweep.csv", report::sweep_csv(cells));
    io::write_file(out / "sweep.svg", report::sweep_bar_chart(cells));
    json bs = a.backbones, ks = a.temporal;
    io::write_manifest(out / "manifest.json",
                       make_manifest("sweep",
                                     json{{"train", io::train_config_to_json(tc)},
                                          {"backbones", bs},
                                          {"temporal", ks},
                                          {"channels", a.channels},
                                          {"scenes", ds.scene_hash}},
                                     ds.scene_hash,
                                     json{{"kind", "network_sweep"}, {"backbones", bs}, {"temporal", ks}}, ds.geometry));
    std::size_t failed = 0;
    for (const auto& c : cells) {
        failed += !c.ok;
        ctx.out << "B=" << c.backbone_blocks << " K=" << c.temporal_layers << ": "
                << (c.ok ? "bcd=" + (c.bcd ? report::fmt(*c.bcd) : std::string("n/a")) +
                               " empty_frame_fraction=" + report::fmt(c.empty_frame_fraction)
                         : "failed: " + c.error)
                << "\n";
    }
    if (failed) ctx.err << failed << " of " << cells.size() << " sweep cells failed\n";
    return kExitOk;
}

struct ReportArgs {
    std::string csv, out, out_dir, title;
    std::optional<std::uint64_t> seed;
};

inline int cmd_report(const ReportArgs& a, Context& ctx) {
    require_path(a.csv, "CSV");
    report::CsvTable t;
    try {
        t = report::parse_csv(io::read_file(a.csv));
    } catch (const ValidationError& e) {
        throw UsageError(a.csv + ": " + e.what());
    }
    std::string svg;
    if (t.kind == "sweep")
        svg = report::sweep_bar_chart(report::parse_sweep_csv(t), a.title.empty() ? "Mean BCD per cell" : a.title);
    else if (t.kind == "report")
        svg = report::bcd_line_plot(report::parse_report_csv(t), a.title.empty() ? "BCD per frame" : a.title);
    else
        throw UsageError("cannot plot a '" + t.kind + "' CSV (expected sweep or report)");
    fs::path dest = a.out;
    if (dest.empty()) {
        dest = fs::path(a.out_dir) / fs::path(a.csv).filename();
        dest.replace_extension(".svg");
    }
    io::write_file(dest, svg);
    ctx.out << "wrote " << dest.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses argv-style arguments (without the program name) and runs a command.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"radarpc: radar cube to point cloud detection toolkit", "radarpc"};
    app.set_version_flag("--version", RADARPC_VERSION);
    app.require_subcommand(1);

    auto seed_opt = [](CLI::App* sub, std::optional<std::uint64_t>& seed) {
        sub->add_option("--seed", seed, "RNG seed (overrides the seed in config files)");
    };
    auto out_opt = [](CLI::App* sub, std::string& dir, bool required) {
        auto* o = sub->add_option("--out-dir", dir, "output directory");
        if (required) o->required();
        else o->default_val(".");
    };
    auto split_opts = [](CLI::App* sub, std::string& split, double& fraction) {
        sub->add_option("--split", split, "frames to use: all, train or test")
            ->check(CLI::IsMember({"all", "train", "test"}))
            ->capture_default_str();
        sub->add_option("--train-fraction", fraction, "leading fraction of frames forming the training split")
            ->capture_default_str();
    };

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "render a synthetic dataset");
    gen->add_option("--scene", ga.scene, "SceneSpec JSON (default: sample random scenes)");
    gen->add_option("--geometry", ga.geometry, "CellGeometry JSON (default: desk geometry)");
    gen->add_option("--frames", ga.frames, "frames per scene");
    gen->add_option("--scenes", ga.scenes, "number of sampled scenes")->capture_default_str();
    gen->add_option("--flicker", ga.flicker, "flicker probability for sampled targets")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    seed_opt(gen, ga.seed);
    out_opt(gen, ga.out_dir, true);

    CfarArgs ca;
    auto* cfar = app.add_subcommand("cfar", "run a CFAR detector over a dataset");
    cfar->add_option("--dataset", ca.dataset, "dataset directory")->required();
    cfar->add_option("--config", ca.config, "CfarConfig JSON");
    cfar->add_option("--variant", ca.variant, "CA, SOCA, GOCA or OS")->check(CLI::IsMember({"CA", "SOCA", "GOCA", "OS"}));
    cfar->add_option("--pfa", ca.pfa, "target false-alarm rate");
    split_opts(cfar, ca.split, ca.train_fraction);
    seed_opt(cfar, ca.seed);
    out_opt(cfar, ca.out_dir, true);

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "train the micro detector");
    tr->add_option("--dataset", ta.dataset, "dataset directory")->required();
    tr->add_option("--train-cfg", ta.train_cfg, "TrainConfig JSON");
    tr->add_option("--network", ta.network_cfg, "NetworkConfig JSON");
    tr->add_option("--backbone", ta.backbone, "residual blocks in the backbone");
    tr->add_option("--temporal", ta.temporal, "temporal layers (0, 2, 4 or 6)");
    tr->add_option("--channels", ta.channels, "base channel count");
    tr->add_option("--epochs", ta.epochs, "training epochs");
    tr->add_option("--lr", ta.lr, "learning rate");
    split_opts(tr, ta.split, ta.train_fraction);
    seed_opt(tr, ta.seed);
    out_opt(tr, ta.out_dir, true);

    InferArgs ia;
    auto* inf = app.add_subcommand("infer", "run a trained checkpoint over a dataset");
    inf->add_option("--checkpoint", ia.checkpoint, "checkpoint file")->required();
    inf->add_option("--dataset", ia.dataset, "dataset directory")->required();
    split_opts(inf, ia.split, ia.train_fraction);
    seed_opt(inf, ia.seed);
    out_opt(inf, ia.out_dir, true);

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "score predicted grids against ground truth");
    ev->add_option("--pred-dir", ea.pred_dir, "directory of predicted .rog grids")->required();
    ev->add_option("--gt-dir", ea.gt_dir, "directory of ground-truth .rog grids")->required();
    ev->add_option("--out", ea.out, "report CSV path (default: <out-dir>/report.csv)");
    seed_opt(ev, ea.seed);
    out_opt(ev, ea.out_dir, false);

    SweepArgs sa;
    auto* sw = app.add_subcommand("sweep", "train and evaluate a grid of backbone and temporal depths");
    sw->add_option("--dataset", sa.dataset, "dataset directory")->required();
    sw->add_option("--backbones", sa.backbones, "backbone block counts")->delimiter(',')->capture_default_str();
    sw->add_option("--temporal", sa.temporal, "temporal layer counts")->delimiter(',')->capture_default_str();
    sw->add_option("--train-cfg", sa.train_cfg, "TrainConfig JSON");
    sw->add_option("--channels", sa.channels, "base channel count")->capture_default_str();
    sw->add_option("--epochs", sa.epochs, "training epochs");
    sw->add_option("--train-fraction", sa.train_fraction, "leading fraction of frames used for training")
        ->capture_default_str();
    seed_opt(sw, sa.seed);
    out_opt(sw, sa.out_dir, true);

    ReportArgs ra;
    auto* rep = app.add_subcommand("report", "render a sweep or report CSV as SVG");
    rep->add_option("--csv", ra.csv, "sweep.csv or report.csv")->required();
    rep->add_option("--out", ra.out, "SVG path (default: <out-dir>/<csv name>.svg)");
    rep->add_option("--title", ra.title, "chart title");
    seed_opt(rep, ra.seed);
    out_opt(rep, ra.out_dir, false);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    }

    Context ctx{out, err};
    try {
        if (*gen) return cmd_generate(ga, ctx);
        if (*cfar) return cmd_cfar(ca, ctx);
        if (*tr) return cmd_train(ta, ctx);
        if (*inf) return cmd_infer(ia, ctx);
        if (*ev) return cmd_eval(ea, ctx);
        if (*sw) return cmd_sweep(sa, ctx);
        if (*rep) return cmd_report(ra, ctx);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

inline int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}

}  // namespace radarpc::cli
