#include <cmath>

#include <gtest/gtest.h>

#include "radarpc/cube.hpp"
#include "radarpc/metrics.hpp"
#include "radarpc/nn/gradcheck.hpp"
#include "radarpc/nn/loss.hpp"
#include "radarpc/nn/train.hpp"
#include "support.hpp"

using namespace radarpc;
using namespace radarpc::nn;

namespace {

RadarCubePair random_cube(const CellGeometry& g, Rng& rng, std::uint64_t frame) {
    RadarCubePair c(g, frame);
    for (std::size_t i = 0; i < c.power.size(); ++i) {
        c.power[i] = static_cast<float>(rng.exponential(1.0) * (rng.bernoulli(0.05) ? 50.0 : 1.0));
        c.elevation[i] = static_cast<float>(rng.uniform(g.elevation.min, g.elevation.max));
    }
    return c;
}

/// Focal loss of the network on one window with random targets.
struct WindowProblem {
    Network net;
    std::vector<FrameInput> inputs;
    std::vector<const FrameInput*> ptrs;
    std::vector<std::uint8_t> targets;

    WindowProblem(const NetworkConfig& cfg, const CellGeometry& g, std::uint64_t seed) : net(build_network(cfg, g)) {
        Rng rng(seed);
        for (std::size_t t = 0; t < cfg.temporal_window; ++t) inputs.push_back(prepare_input(random_cube(g, rng, t)));
        for (const auto& i : inputs) ptrs.push_back(&i);
        targets.resize(g.grid_voxels());
        for (auto& v : targets) v = rng.bernoulli(0.2);
        // perturb every parameter so zero-initialized tensors are exercised too
        for (auto& t : net.params.values)
            for (auto& v : t.data) v += rng.uniform(-0.05, 0.05);
    }

    double loss() const { return focal_loss(forward_window(net, ptrs).data, targets, 0.75, 2.0).loss; }

    Gradients gradients() const {
        WindowCache cache;
        const Tensor logits = forward_window(net, ptrs, &cache);
        const auto fl = focal_loss(logits.data, targets, 0.75, 2.0);
        Tensor dl(logits.shape);
        dl.data = fl.grad;
        Gradients g = net.params.zeros_like();
        backward_window(net, ptrs, cache, dl, g);
        return g;
    }
};

double worst_param_error(WindowProblem& p) {
    const Gradients g = p.gradients();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto r = grad_check([&] { return p.loss(); }, p.net.params.values[i].data, g[i].data, 12, 5 + i);
        EXPECT_LT(r.max_relative_error, 1e-4) << p.net.params.names[i];
        worst = std::max(worst, r.max_relative_error);
    }
    return worst;
}

nn::Dataset small_dataset(const CellGeometry& g, std::size_t scenes, std::size_t frames, std::uint64_t seed) {
    nn::Dataset ds;
    SceneSampler sp;
    sp.frame_count = frames;
    for (std::size_t s = 0; s < scenes; ++s) {
        const SceneSpec spec = sample_scene(sp, g, seed + s);
        nn::Sequence seq;
        seq.frames = render_radar_frames(spec, g);
        for (auto& gt : render_ground_truth(spec, g)) seq.truth.push_back(std::move(gt.grid));
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

}  // namespace

TEST(Network, ParameterCountMatchesClosedForm) {
    const CellGeometry g = test::small_geometry();
    for (std::size_t b : {1u, 2u, 4u, 12u})
        for (std::size_t k : {0u, 2u, 4u, 6u}) {
            NetworkConfig c;
            c.backbone_blocks = b;
            c.temporal_layers = k;
            const Network n = build_network(c, g);
            EXPECT_EQ(n.parameter_count(), expected_parameter_count(c, g)) << b << "/" << k;
        }
    // hand count for B = 1, K = 0, C = 8, D = 16, E = 8:
    // doppler 32 + 16 + 1032, stem 656, one block 1168, head 1160
    NetworkConfig c;
    c.backbone_blocks = 1;
    EXPECT_EQ(build_network(c, g).parameter_count(), 4064u);
}

TEST(Network, RejectsInvalidConfigs) {
    const CellGeometry g = test::small_geometry();
    NetworkConfig c;
    c.temporal_layers = 3;
    EXPECT_THROW(build_network(c, g), ValidationError);
    c.temporal_layers = 8;
    EXPECT_THROW(build_network(c, g), ValidationError);
    c = {};
    c.temporal_window = 2;
    EXPECT_THROW(build_network(c, g), ValidationError);
    c = {};
    c.backbone_blocks = 0;
    EXPECT_THROW(build_network(c, g), ValidationError);
    c = {};
    c.base_channels = 6;  // not divisible by 4 groups
    EXPECT_THROW(build_network(c, g), ValidationError);
}

TEST(Network, GradientsMatchFiniteDifferencesFrameOnly) {
    NetworkConfig c;
    c.backbone_blocks = 2;
    c.base_channels = 4;
    c.groupnorm_groups = 2;
    WindowProblem p(c, test::tiny_geometry(6, 5, 3, 4), 11);
    EXPECT_LT(worst_param_error(p), 1e-4);
}

TEST(Network, GradientsMatchFiniteDifferencesWithTemporalHead) {
    NetworkConfig c;
    c.backbone_blocks = 1;
    c.base_channels = 4;
    c.groupnorm_groups = 2;
    c.temporal_layers = 4;
    c.temporal_channels = 2;
    WindowProblem p(c, test::tiny_geometry(5, 4, 3, 4), 12);
    EXPECT_LT(worst_param_error(p), 1e-4);
}

TEST(Network, ForwardIsDeterministic) {
    const CellGeometry g = test::small_geometry();
    NetworkConfig c;
    c.temporal_layers = 2;
    c.seed = 3;
    Rng rng(1);
    std::vector<RadarCubePair> frames;
    for (int i = 0; i < 4; ++i) frames.push_back(random_cube(g, rng, i));
    const auto a = infer(build_network(c, g), frames);
    const auto b = infer(build_network(c, g), frames);
    for (std::size_t i = 0; i < a.grids.size(); ++i) EXPECT_EQ(a.grids[i], b.grids[i]);
    c.seed = 4;
    EXPECT_FALSE(build_network(c, g).params.values == build_network(NetworkConfig{.seed = 3}, g).params.values);
}

TEST(Network, ZeroParametersPredictNothing) {
    const CellGeometry g = test::small_geometry();
    Network n = build_network(NetworkConfig{}, g);
    for (auto& t : n.params.values) t.zero();
    Rng rng(2);
    std::vector<RadarCubePair> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(random_cube(g, rng, i));
    const auto r = infer(n, frames);
    EXPECT_EQ(r.empty_fraction, 1.0);
    std::vector<OccupancyGrid> gt;
    for (int i = 0; i < 3; ++i) gt.push_back(test::random_grid(g, rng, 0.02));
    const auto m = evaluate_run(r.grids, gt, g);
    EXPECT_FALSE(m.mean_bcd.has_value());
    EXPECT_EQ(m.empty_frame_fraction, 1.0);
}

TEST(Network, WindowIndicesReplicateEdges) {
    EXPECT_EQ(window_indices(0, 5, 3), (std::vector<std::size_t>{0, 0, 1}));
    EXPECT_EQ(window_indices(4, 5, 3), (std::vector<std::size_t>{3, 4, 4}));
    EXPECT_EQ(window_indices(2, 5, 5), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_EQ(window_indices(0, 1, 5), (std::vector<std::size_t>{0, 0, 0, 0, 0}));
    EXPECT_EQ(window_indices(3, 10, 1), (std::vector<std::size_t>{3}));
}

TEST(Network, LayoutConversionsAreInverse) {
    const CellGeometry g = test::tiny_geometry(3, 4, 5, 2);
    Rng rng(3);
    const OccupancyGrid grid = test::random_grid(g, rng, 0.5);
    const auto logit_targets = to_logit_layout(grid.occupancy, g);
    Tensor t({5, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = logit_targets[i];
    const auto back = to_grid_layout(t);
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], grid.occupancy[i]);
}

TEST(Network, WrongWindowLengthRejected) {
    const CellGeometry g = test::small_geometry();
    const Network n = build_network(NetworkConfig{}, g);
    Rng rng(4);
    std::vector<RadarCubePair> frames{random_cube(g, rng, 0)};
    EXPECT_THROW(forward(n, frames), ValidationError);
    EXPECT_THROW(infer(n, std::vector<RadarCubePair>{random_cube(test::tiny_geometry(), rng, 0)}), ValidationError);
}

TEST(Training, ShortRunReducesLoss) {
    const CellGeometry g = test::small_geometry();
    const auto ds = small_dataset(g, 2, 6, 100);
    TrainConfig tc;
    tc.epochs = 3;
    const auto r = train(build_network(NetworkConfig{}, g), ds, tc);
    ASSERT_EQ(r.history.size(), 4u);
    EXPECT_EQ(r.history[0].epoch, 0u);
    EXPECT_LT(r.history.back().train_focal, r.history.front().train_focal);
    EXPECT_NEAR(r.history[2].learning_rate, tc.learning_rate * tc.lr_decay, 1e-15);
}

TEST(Training, IsDeterministic) {
    const CellGeometry g = test::small_geometry();
    const auto ds = small_dataset(g, 1, 5, 200);
    TrainConfig tc;
    tc.epochs = 2;
    NetworkConfig nc;
    nc.temporal_layers = 2;
    const auto a = train(build_network(nc, g), ds, tc);
    const auto b = train(build_network(nc, g), ds, tc);
    EXPECT_EQ(a.network.params.values, b.network.params.values);
}

TEST(Training, RejectsBadBatchConfig) {
    const CellGeometry g = test::small_geometry();
    const auto ds = small_dataset(g, 1, 3, 300);
    TrainConfig tc;
    tc.effective_batch = 6;  // not a multiple of the micro-batch
    EXPECT_THROW(train(build_network(NetworkConfig{}, g), ds, tc), ValidationError);
    EXPECT_THROW(train(build_network(NetworkConfig{}, g), nn::Dataset{}, TrainConfig{}), ValidationError);
}
