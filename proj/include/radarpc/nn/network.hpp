#pragma once

// Micro radar detector.
//
//   Doppler encoder   conv1d(1->C, k=3) -> group norm -> ReLU -> conv1d(C->C, k=D)
//                     applied to every (range, azimuth) Doppler profile, giving
//                     C features per cell; the elevation estimate is appended
//                     as one more channel.
//   Backbone          stem conv2d(C+1->C) + ReLU, 2x average-pool, B residual
//                     blocks  h <- ReLU(h + conv(ReLU(conv(h)))),  nearest 2x
//                     upsample, skip-add of the stem output.
//   Output head       conv2d over [features, elevation-bin basis] -> E logits
//                     per (range, azimuth) cell.
//   Temporal head     K conv3d layers over the T per-frame logit volumes stacked
//                     as channels, added to the center frame's logits. K = 0
//                     returns the center frame's logits unchanged.
//
// Logit volumes are (E, R, A) internally; to_grid_layout reorders to the
// (R, A, E) occupancy layout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "radarpc/cube.hpp"
#include "radarpc/geometry.hpp"
#include "radarpc/nn/ops.hpp"
#include "radarpc/nn/tensor.hpp"
#include "radarpc/util.hpp"

namespace radarpc::nn {

struct NetworkConfig {
    std::size_t backbone_blocks = 2;   // capacity ladder rung: 2, 4, 8, 12
    std::size_t base_channels = 8;
    std::size_t temporal_layers = 0;   // 0, 2, 4, 6
    std::size_t temporal_window = 3;
    std::size_t groupnorm_groups = 4;
    std::size_t temporal_channels = 4;
    std::uint64_t seed = 0;

    void validate() const {
        if (backbone_blocks < 1) throw ValidationError("backbone_blocks", "must be >= 1");
        if (base_channels < 1) throw ValidationError("base_channels", "must be >= 1");
        if (temporal_layers % 2 != 0 || temporal_layers > 6)
            throw ValidationError("temporal_layers", "must be even and <= 6");
        if (temporal_window % 2 == 0) throw ValidationError("temporal_window", "must be odd");
        if (groupnorm_groups < 1 || base_channels % groupnorm_groups != 0)
            throw ValidationError("groupnorm_groups", "must divide base_channels");
        if (temporal_layers > 0 && temporal_channels < 1)
            throw ValidationError("temporal_channels", "must be >= 1");
    }

    bool operator==(const NetworkConfig&) const = default;
};

/// Named parameter tensors. Only convolution kernels are regularized.
struct ParameterSet {
    std::vector<std::string> names;
    std::vector<Tensor> values;
    std::vector<bool> regularized;

    std::size_t add(std::string name, std::vector<std::size_t> shape, bool reg) {
        names.push_back(std::move(name));
        values.emplace_back(std::move(shape));
        regularized.push_back(reg);
        return values.size() - 1;
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& t : values) n += t.size();
        return n;
    }

    std::vector<Tensor> zeros_like() const {
        std::vector<Tensor> g;
        g.reserve(values.size());
        for (const auto& t : values) g.emplace_back(t.shape);
        return g;
    }

    std::ptrdiff_t find(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<std::ptrdiff_t>(i);
        return -1;
    }
};

using Gradients = std::vector<Tensor>;

struct Network {
    NetworkConfig config;
    CellGeometry geometry;
    ParameterSet params;

    struct ConvIds {
        std::size_t w = 0, b = 0;
    };
    struct BlockIds {
        ConvIds a, b;
    };
    ConvIds doppler1, doppler2, stem, head;
    std::size_t gn_gamma = 0, gn_beta = 0;
    std::vector<BlockIds> blocks;
    std::vector<ConvIds> temporal;

    std::size_t parameter_count() const { return params.scalar_count(); }

    const Tensor& p(std::size_t id) const { return params.values[id]; }
};

/// Closed-form parameter count (documented in docs/architecture.md):
///   Doppler encoder  3C + C + 2C + C*C*D + C
///   stem             9C(C+1) + C
///   backbone         B * 2 * (9C^2 + C)
///   head             9E(C+E) + E
///   temporal         27*Ct*T + Ct, (K-2) * (27*Ct^2 + Ct), 27*Ct + 1   (K >= 2)
inline std::size_t expected_parameter_count(const NetworkConfig& c, const CellGeometry& g) {
    const std::size_t C = c.base_channels, D = g.doppler_bins, E = g.elevation_bins, B = c.backbone_blocks;
    std::size_t n = 3 * C + C + 2 * C + C * C * D + C;
    n += 9 * C * (C + 1) + C;
    n += B * 2 * (9 * C * C + C);
    n += 9 * E * (C + E) + E;
    if (c.temporal_layers > 0) {
        const std::size_t Ct = c.temporal_channels, T = c.temporal_window, K = c.temporal_layers;
        n += 27 * Ct * T + Ct;
        n += (K - 2) * (27 * Ct * Ct + Ct);
        n += 27 * Ct + 1;
    }
    return n;
}

namespace detail {

inline void kaiming_fill(Tensor& w, std::size_t fan_in, Rng& rng, double scale = 1.0) {
    const double std = scale * std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w.data) v = std * rng.normal();
}

}  // namespace detail

/// Builds a network with Kaiming fan-in initialization. Every parameter
/// group draws from its own stream keyed by the parameter name, so adding
/// temporal layers leaves the per-frame parameters unchanged.
inline Network build_network(const NetworkConfig& config, const CellGeometry& geometry) {
    config.validate();
    geometry.validate();
    Network net;
    net.config = config;
    net.geometry = geometry;
    const std::size_t C = config.base_channels, D = geometry.doppler_bins, E = geometry.elevation_bins;
    auto& ps = net.params;

    auto conv = [&](const std::string& name, std::vector<std::size_t> wshape) {
        Network::ConvIds ids;
        const std::size_t cout = wshape[0];
        ids.w = ps.add(name + ".weight", std::move(wshape), true);
        ids.b = ps.add(name + ".bias", {cout}, false);
        return ids;
    };

    net.doppler1 = conv("doppler.conv1", {C, 1, 3});
    net.gn_gamma = ps.add("doppler.norm.gamma", {C}, false);
    net.gn_beta = ps.add("doppler.norm.beta", {C}, false);
    net.doppler2 = conv("doppler.conv2", {C, C, D});
    net.stem = conv("backbone.stem", {C, C + 1, 3, 3});
    for (std::size_t b = 0; b < config.backbone_blocks; ++b) {
        const std::string prefix = "backbone.block" + std::to_string(b);
        net.blocks.push_back({conv(prefix + ".conv_a", {C, C, 3, 3}), conv(prefix + ".conv_b", {C, C, 3, 3})});
    }
    net.head = conv("head", {E, C + E, 3, 3});
    for (std::size_t k = 0; k < config.temporal_layers; ++k) {
        const std::size_t cin = k == 0 ? config.temporal_window : config.temporal_channels;
        const std::size_t cout = k + 1 == config.temporal_layers ? 1 : config.temporal_channels;
        net.temporal.push_back(conv("temporal.conv" + std::to_string(k), {cout, cin, 3, 3, 3}));
    }

    for (std::size_t i = 0; i < ps.values.size(); ++i) {
        Tensor& t = ps.values[i];
        const std::string& name = ps.names[i];
        if (name == "doppler.norm.gamma") {
            std::fill(t.data.begin(), t.data.end(), 1.0);
            continue;
        }
        if (!ps.regularized[i]) continue;  // biases and beta start at zero
        Rng rng(derive_seed(config.seed, {fnv1a64(name)}));
        const std::size_t fan_in = t.size() / t.dim(0);
        // the last temporal layer starts small so the head begins near identity
        const bool last_temporal = config.temporal_layers > 0 &&
                                   name == "temporal.conv" + std::to_string(config.temporal_layers - 1) + ".weight";
        detail::kaiming_fill(t, fan_in, rng, last_temporal ? 0.1 : 1.0);
    }
    return net;
}

// ---------------------------------------------------------------------------
// Inputs

/// Network-ready features for one radar frame.
struct FrameInput {
    Tensor doppler;    // (R*A, 1, D): log1p(power / frame mean power)
    Tensor elevation;  // (1, R, A): elevation at the strongest Doppler bin, scaled to [-1, 1]
    Tensor basis;      // (E, R, A): triangular membership of that elevation in each bin
};

inline FrameInput prepare_input(const RadarCubePair& cube) {
    const CellGeometry& g = cube.geometry;
    const std::size_t R = g.range_bins, A = g.azimuth_bins, D = g.doppler_bins, E = g.elevation_bins;
    FrameInput in;
    in.doppler = Tensor({R * A, 1, D});
    in.elevation = Tensor({1, R, A});
    in.basis = Tensor({E, R, A});
    double mean = 0.0;
    for (float v : cube.power) mean += v;
    mean /= static_cast<double>(cube.power.size());
    const double ref = mean > 0.0 ? mean : 1.0;
    const double pitch = g.pitch(Axis::Elevation);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t cell = r * A + a;
            std::size_t best = 0;
            for (std::size_t d = 0; d < D; ++d) {
                const double p = cube.power[cube.index(r, a, d)];
                in.doppler[cell * D + d] = std::log1p(p / ref);
                if (p > cube.power[cube.index(r, a, best)]) best = d;
            }
            const double el = cube.elevation[cube.index(r, a, best)];
            in.elevation[cell] = 2.0 * (el - g.elevation.min) / g.elevation.span() - 1.0;
            for (std::size_t e = 0; e < E; ++e)
                in.basis[e * R * A + cell] =
                    std::max(0.0, 1.0 - std::abs(el - g.center(Axis::Elevation, e)) / pitch);
        }
    return in;
}

// ---------------------------------------------------------------------------
// Per-frame forward / backward

struct FrameCache {
    Tensor c1, g1, r1;    // Doppler encoder
    GroupNormCache gn;
    Tensor in0;           // (C+1, R, A)
    Tensor stem_pre, stem;
    Tensor down;
    struct Block {
        Tensor x, a_pre, a, b, sum;
    };
    std::vector<Block> blocks;
    Tensor small;         // backbone output at half resolution
    Tensor head_in;       // (C+E, R, A)
};

inline Tensor forward_frame(const Network& net, const FrameInput& in, FrameCache* cache = nullptr) {
    const CellGeometry& g = net.geometry;
    const std::size_t R = g.range_bins, A = g.azimuth_bins, D = g.doppler_bins, E = g.elevation_bins;
    const std::size_t C = net.config.base_channels, N = R * A;
    expect_shape(in.doppler, {N, 1, D}, "frame_input.doppler");

    FrameCache local;
    FrameCache& fc = cache ? *cache : local;

    fc.c1 = conv1d_forward(in.doppler, net.p(net.doppler1.w), net.p(net.doppler1.b), 1);
    fc.g1 = group_norm_forward(fc.c1, N, C, D, net.config.groupnorm_groups, net.p(net.gn_gamma), net.p(net.gn_beta),
                               fc.gn);
    fc.r1 = relu_forward(fc.g1);
    const Tensor c2 = conv1d_forward(fc.r1, net.p(net.doppler2.w), net.p(net.doppler2.b), 0);  // (N, C, 1)

    fc.in0 = Tensor({C + 1, R, A});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t n = 0; n < N; ++n) fc.in0[c * N + n] = c2[n * C + c];
    std::copy(in.elevation.data.begin(), in.elevation.data.end(), fc.in0.data.begin() + static_cast<std::ptrdiff_t>(C * N));

    fc.stem_pre = conv2d_forward(fc.in0, net.p(net.stem.w), net.p(net.stem.b));
    fc.stem = relu_forward(fc.stem_pre);
    fc.down = downsample2_forward(fc.stem);
    fc.blocks.resize(net.blocks.size());
    Tensor h = fc.down;
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        auto& bc = fc.blocks[b];
        bc.x = h;
        bc.a_pre = conv2d_forward(bc.x, net.p(net.blocks[b].a.w), net.p(net.blocks[b].a.b));
        bc.a = relu_forward(bc.a_pre);
        bc.b = conv2d_forward(bc.a, net.p(net.blocks[b].b.w), net.p(net.blocks[b].b.b));
        bc.sum = add_forward(bc.x, bc.b);
        h = relu_forward(bc.sum);
    }
    fc.small = h;
    const Tensor u = add_forward(upsample2_forward(fc.small, R, A), fc.stem);

    fc.head_in = Tensor({C + E, R, A});
    std::copy(u.data.begin(), u.data.end(), fc.head_in.data.begin());
    std::copy(in.basis.data.begin(), in.basis.data.end(), fc.head_in.data.begin() + static_cast<std::ptrdiff_t>(C * N));
    return conv2d_forward(fc.head_in, net.p(net.head.w), net.p(net.head.b));
}

inline void backward_frame(const Network& net, const FrameInput& in, const FrameCache& fc, const Tensor& dlogits,
                           Gradients& grads) {
    const CellGeometry& g = net.geometry;
    const std::size_t R = g.range_bins, A = g.azimuth_bins, D = g.doppler_bins;
    const std::size_t C = net.config.base_channels, N = R * A;

    Tensor dhead_in(fc.head_in.shape);
    conv2d_backward(fc.head_in, net.p(net.head.w), dlogits, &dhead_in, grads[net.head.w], grads[net.head.b]);

    // u = upsample(small) + stem; only the first C channels of head_in are learned features
    Tensor du({C, R, A});
    std::copy(dhead_in.data.begin(), dhead_in.data.begin() + static_cast<std::ptrdiff_t>(C * N), du.data.begin());
    Tensor dstem = du;
    Tensor dh(fc.small.shape);
    upsample2_backward(du, dh);

    for (std::size_t bi = net.blocks.size(); bi-- > 0;) {
        const auto& bc = fc.blocks[bi];
        Tensor dsum(bc.sum.shape);
        relu_backward(bc.sum, dh, dsum);
        Tensor dx = dsum;  // residual path
        Tensor da(bc.a.shape);
        conv2d_backward(bc.a, net.p(net.blocks[bi].b.w), dsum, &da, grads[net.blocks[bi].b.w],
                        grads[net.blocks[bi].b.b]);
        Tensor da_pre(bc.a_pre.shape);
        relu_backward(bc.a_pre, da, da_pre);
        conv2d_backward(bc.x, net.p(net.blocks[bi].a.w), da_pre, &dx, grads[net.blocks[bi].a.w],
                        grads[net.blocks[bi].a.b]);
        dh = std::move(dx);
    }
    downsample2_backward(fc.stem.shape, dh, dstem);

    Tensor dstem_pre(fc.stem_pre.shape);
    relu_backward(fc.stem_pre, dstem, dstem_pre);
    Tensor din0(fc.in0.shape);
    conv2d_backward(fc.in0, net.p(net.stem.w), dstem_pre, &din0, grads[net.stem.w], grads[net.stem.b]);

    Tensor dc2({N, C, 1});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t n = 0; n < N; ++n) dc2[n * C + c] = din0[c * N + n];
    Tensor dr1(fc.r1.shape);
    conv1d_backward(fc.r1, net.p(net.doppler2.w), 0, dc2, &dr1, grads[net.doppler2.w], grads[net.doppler2.b]);
    Tensor dg1(fc.g1.shape);
    relu_backward(fc.g1, dr1, dg1);
    Tensor dc1(fc.c1.shape);
    group_norm_backward(fc.gn, N, C, D, net.config.groupnorm_groups, net.p(net.gn_gamma), dg1, &dc1,
                        grads[net.gn_gamma], grads[net.gn_beta]);
    conv1d_backward(in.doppler, net.p(net.doppler1.w), 1, dc1, nullptr, grads[net.doppler1.w],
                    grads[net.doppler1.b]);
}

// ---------------------------------------------------------------------------
// Temporal window

struct WindowCache {
    std::vector<FrameCache> frames;
    std::vector<Tensor> layer_in;   // input to temporal layer k
    std::vector<Tensor> layer_out;  // pre-activation output of temporal layer k
};

/// Logits (E, R, A) for the center frame of a window of T prepared frames.
inline Tensor forward_window(const Network& net, std::span<const FrameInput* const> window,
                             WindowCache* cache = nullptr) {
    const std::size_t T = net.config.temporal_window;
    if (window.size() != T)
        throw ValidationError("window", "expected " + std::to_string(T) + " frames, got " + std::to_string(window.size()));
    const std::size_t center = T / 2;
    const std::size_t K = net.config.temporal_layers;
    if (K == 0) {
        if (cache) cache->frames.assign(1, FrameCache{});
        return forward_frame(net, *window[center], cache ? &cache->frames[0] : nullptr);
    }

    std::vector<FrameCache> local(T);
    std::vector<FrameCache>& frames = cache ? cache->frames : local;
    frames.assign(T, FrameCache{});
    std::vector<Tensor> logits(T);
    for (std::size_t t = 0; t < T; ++t) logits[t] = forward_frame(net, *window[t], &frames[t]);

    const std::size_t vol = logits[0].size();
    Tensor x({T, logits[0].dim(0), logits[0].dim(1), logits[0].dim(2)});
    for (std::size_t t = 0; t < T; ++t) std::copy(logits[t].data.begin(), logits[t].data.end(), x.data.begin() + static_cast<std::ptrdiff_t>(t * vol));

    if (cache) {
        cache->layer_in.assign(K, Tensor{});
        cache->layer_out.assign(K, Tensor{});
    }
    for (std::size_t k = 0; k < K; ++k) {
        Tensor y = conv3d_forward(x, net.p(net.temporal[k].w), net.p(net.temporal[k].b));
        if (cache) {
            cache->layer_in[k] = std::move(x);
            cache->layer_out[k] = y;
        }
        x = k + 1 < K ? relu_forward(y) : std::move(y);
    }
    Tensor out = logits[center];
    for (std::size_t i = 0; i < vol; ++i) out[i] += x[i];
    return out;
}

inline void backward_window(const Network& net, std::span<const FrameInput* const> window, const WindowCache& cache,
                            const Tensor& dlogits, Gradients& grads) {
    const std::size_t T = net.config.temporal_window;
    const std::size_t center = T / 2;
    const std::size_t K = net.config.temporal_layers;
    if (K == 0) {
        backward_frame(net, *window[center], cache.frames[0], dlogits, grads);
        return;
    }
    const std::size_t vol = dlogits.size();
    // temporal branch
    Tensor dy({1, dlogits.dim(0), dlogits.dim(1), dlogits.dim(2)});
    dy.data = dlogits.data;
    for (std::size_t k = K; k-- > 0;) {
        Tensor dx(cache.layer_in[k].shape);
        conv3d_backward(cache.layer_in[k], net.p(net.temporal[k].w), dy, &dx, grads[net.temporal[k].w],
                        grads[net.temporal[k].b]);
        if (k > 0) {
            Tensor dpre(cache.layer_out[k - 1].shape);
            relu_backward(cache.layer_out[k - 1], dx, dpre);
            dy = std::move(dpre);
        } else {
            dy = std::move(dx);
        }
    }
    for (std::size_t t = 0; t < T; ++t) {
        Tensor dframe({dlogits.dim(0), dlogits.dim(1), dlogits.dim(2)});
        std::copy(dy.data.begin() + static_cast<std::ptrdiff_t>(t * vol),
                  dy.data.begin() + static_cast<std::ptrdiff_t>((t + 1) * vol), dframe.data.begin());
        if (t == center)
            for (std::size_t i = 0; i < vol; ++i) dframe[i] += dlogits[i];  // identity path
        backward_frame(net, *window[t], cache.frames[t], dframe, grads);
    }
}

/// (E, R, A) -> (R, A, E), the occupancy-grid layout.
inline std::vector<double> to_grid_layout(const Tensor& logits) {
    const std::size_t E = logits.dim(0), R = logits.dim(1), A = logits.dim(2);
    std::vector<double> out(logits.size());
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t a = 0; a < A; ++a) out[(r * A + a) * E + e] = logits[(e * R + r) * A + a];
    return out;
}

/// (R, A, E) occupancy -> (E, R, A) targets matching the logit layout.
inline std::vector<std::uint8_t> to_logit_layout(const std::vector<std::uint8_t>& grid, const CellGeometry& g) {
    const std::size_t E = g.elevation_bins, R = g.range_bins, A = g.azimuth_bins;
    std::vector<std::uint8_t> out(grid.size());
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t e = 0; e < E; ++e) out[(e * R + r) * A + a] = grid[(r * A + a) * E + e];
    return out;
}

/// Edge-replicated window of indices centered on `center` within [0, count).
inline std::vector<std::size_t> window_indices(std::size_t center, std::size_t count, std::size_t T) {
    std::vector<std::size_t> idx(T);
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(T / 2);
    for (std::size_t t = 0; t < T; ++t) {
        const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(center) + static_cast<std::ptrdiff_t>(t) - half;
        idx[t] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(count) - 1));
    }
    return idx;
}

}  // namespace radarpc::nn
