#pragma once

// Training and inference for the micro detector.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radarpc/cube.hpp"
#include "radarpc/grid.hpp"
#include "radarpc/nn/loss.hpp"
#include "radarpc/nn/network.hpp"
#include "radarpc/util.hpp"

namespace radarpc::nn {

struct TrainConfig {
    double alpha = 0.99;
    double gamma = 2.0;
    double l1_coeff = 1e-7;
    double l2_coeff = 1e-6;
    std::size_t micro_batch = 4;
    std::size_t effective_batch = 8;
    double learning_rate = 3e-3;
    double lr_decay = 0.95;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha", "must be in [0,1]");
        if (!(gamma >= 0.0)) throw ValidationError("gamma", "must be >= 0");
        if (!(l1_coeff >= 0.0)) throw ValidationError("l1_coeff", "must be >= 0");
        if (!(l2_coeff >= 0.0)) throw ValidationError("l2_coeff", "must be >= 0");
        if (micro_batch < 1) throw ValidationError("micro_batch", "must be >= 1");
        if (effective_batch < micro_batch || effective_batch % micro_batch != 0)
            throw ValidationError("effective_batch", "must be a positive multiple of micro_batch");
        if (!(learning_rate > 0.0)) throw ValidationError("learning_rate", "must be > 0");
        if (!(lr_decay > 0.0)) throw ValidationError("lr_decay", "must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1", "must be in [0,1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta2", "must be in [0,1)");
    }

    bool operator==(const TrainConfig&) const = default;
};

/// Consecutive frames of one scene with their reference grids.
struct Sequence {
    std::vector<RadarCubePair> frames;
    std::vector<OccupancyGrid> truth;
};

/// Windows never cross sequence boundaries; edges are replicated.
struct Dataset {
    std::vector<Sequence> sequences;

    std::size_t frame_count() const {
        std::size_t n = 0;
        for (const auto& s : sequences) n += s.frames.size();
        return n;
    }
};

struct EpochRecord {
    std::size_t epoch = 0;         // 0 is the untrained network
    double train_focal = 0.0;      // mean focal loss over the training windows
    std::optional<double> validation_focal;
    double parameter_norm = 0.0;   // L2 norm of the regularized kernels
    double learning_rate = 0.0;
};

struct TrainResult {
    Network network;
    std::vector<EpochRecord> history;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// First/second-moment adaptive step sizes with bias correction.
class AdamState {
public:
    explicit AdamState(const ParameterSet& ps) : m_(ps.zeros_like()), v_(ps.zeros_like()) {}

    void step(ParameterSet& ps, const Gradients& g, double lr, double beta1, double beta2) {
        ++t_;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < ps.values.size(); ++i) {
            Tensor& w = ps.values[i];
            for (std::size_t j = 0; j < w.size(); ++j) {
                const double gj = g[i][j];
                m_[i][j] = beta1 * m_[i][j] + (1.0 - beta1) * gj;
                v_[i][j] = beta2 * v_[i][j] + (1.0 - beta2) * gj * gj;
                w[j] -= lr * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + 1e-8);
            }
        }
    }

private:
    std::vector<Tensor> m_, v_;
    std::size_t t_ = 0;
};

inline double regularized_norm(const ParameterSet& ps) {
    double s = 0.0;
    for (std::size_t i = 0; i < ps.values.size(); ++i)
        if (ps.regularized[i])
            for (double w : ps.values[i].data) s += w * w;
    return std::sqrt(s);
}

namespace detail {

struct PreparedSequence {
    std::vector<FrameInput> inputs;
    std::vector<std::vector<std::uint8_t>> targets;  // (E, R, A) layout
};

struct SampleRef {
    std::size_t sequence = 0;
    std::size_t frame = 0;
};

inline std::vector<PreparedSequence> prepare(const Dataset& ds, const CellGeometry& g) {
    std::vector<PreparedSequence> out(ds.sequences.size());
    for (std::size_t s = 0; s < ds.sequences.size(); ++s) {
        const Sequence& seq = ds.sequences[s];
        if (seq.frames.size() != seq.truth.size())
            throw ValidationError("dataset", "sequence " + std::to_string(s) + " has unequal frame and truth counts");
        out[s].inputs.resize(seq.frames.size());
        out[s].targets.resize(seq.frames.size());
        parallel_for(seq.frames.size(), [&](std::size_t f) {
            if (!(seq.frames[f].geometry == g) || !(seq.truth[f].geometry == g))
                throw ValidationError("geometry", "dataset frame does not match the network geometry");
            out[s].inputs[f] = prepare_input(seq.frames[f]);
            out[s].targets[f] = to_logit_layout(seq.truth[f].occupancy, g);
        });
    }
    return out;
}

inline std::vector<SampleRef> samples_of(const std::vector<PreparedSequence>& seqs) {
    std::vector<SampleRef> s;
    for (std::size_t i = 0; i < seqs.size(); ++i)
        for (std::size_t f = 0; f < seqs[i].inputs.size(); ++f) s.push_back({i, f});
    return s;
}

inline std::vector<const FrameInput*> window_of(const Network& net, const PreparedSequence& seq, std::size_t frame) {
    std::vector<const FrameInput*> w;
    for (std::size_t i : window_indices(frame, seq.inputs.size(), net.config.temporal_window))
        w.push_back(&seq.inputs[i]);
    return w;
}

inline double mean_focal(const Network& net, const std::vector<PreparedSequence>& seqs, const TrainConfig& cfg) {
    const auto samples = samples_of(seqs);
    std::vector<double> losses(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const auto& seq = seqs[samples[i].sequence];
        const auto w = window_of(net, seq, samples[i].frame);
        const Tensor logits = forward_window(net, w);
        losses[i] = focal_loss(logits.data, seq.targets[samples[i].frame], cfg.alpha, cfg.gamma).loss;
    });
    double s = 0.0;
    for (double l : losses) s += l;
    return samples.empty() ? 0.0 : s / static_cast<double>(samples.size());
}

}  // namespace detail

/// Trains with gradient accumulation to `effective_batch` windows per step.
/// Loss = mean focal + l1 * sum|w| + l2 * sum w^2 over convolution kernels.
/// The per-sample gradients of each micro-batch are computed independently
/// and summed in sample order, so results do not depend on thread count.
inline TrainResult train(Network net, const Dataset& data, const TrainConfig& cfg,
                         const Dataset* validation = nullptr) {
    cfg.validate();
    if (data.frame_count() == 0) throw ValidationError("dataset", "must contain at least one frame");
    const auto seqs = detail::prepare(data, net.geometry);
    std::vector<detail::PreparedSequence> val;
    if (validation) val = detail::prepare(*validation, net.geometry);
    auto samples = detail::samples_of(seqs);

    TrainResult result;
    auto record = [&](std::size_t epoch, double train_loss, double lr) {
        EpochRecord r;
        r.epoch = epoch;
        r.train_focal = train_loss;
        if (validation) r.validation_focal = detail::mean_focal(net, val, cfg);
        r.parameter_norm = regularized_norm(net.params);
        r.learning_rate = lr;
        result.history.push_back(r);
    };
    record(0, detail::mean_focal(net, seqs, cfg), cfg.learning_rate);

    AdamState adam(net.params);
    Rng order_rng(derive_seed(cfg.seed, {0x7EA1}));
    Gradients accum = net.params.zeros_like();
    std::size_t step = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch - 1));
        order_rng.shuffle(samples);
        double epoch_loss = 0.0;
        std::size_t in_batch = 0;

        auto apply_step = [&] {
            const double inv = 1.0 / static_cast<double>(in_batch);
            for (std::size_t i = 0; i < accum.size(); ++i) {
                Tensor& g = accum[i];
                const Tensor& w = net.params.values[i];
                for (std::size_t j = 0; j < g.size(); ++j) {
                    g[j] *= inv;
                    if (net.params.regularized[i])
                        g[j] += cfg.l1_coeff * ((w[j] > 0) - (w[j] < 0)) + 2.0 * cfg.l2_coeff * w[j];
                }
            }
            adam.step(net.params, accum, lr, cfg.beta1, cfg.beta2);
            for (auto& g : accum) g.zero();
            in_batch = 0;
            ++step;
        };

        for (std::size_t start = 0; start < samples.size(); start += cfg.micro_batch) {
            const std::size_t count = std::min(cfg.micro_batch, samples.size() - start);
            std::vector<Gradients> per(count);
            std::vector<double> losses(count);
            parallel_for(count, [&](std::size_t i) {
                const auto& ref = samples[start + i];
                const auto& seq = seqs[ref.sequence];
                const auto w = detail::window_of(net, seq, ref.frame);
                WindowCache cache;
                const Tensor logits = forward_window(net, w, &cache);
                FocalLoss fl = focal_loss(logits.data, seq.targets[ref.frame], cfg.alpha, cfg.gamma);
                losses[i] = fl.loss;
                Tensor dlogits(logits.shape);
                dlogits.data = std::move(fl.grad);
                per[i] = net.params.zeros_like();
                backward_window(net, w, cache, dlogits, per[i]);
            });
            for (std::size_t i = 0; i < count; ++i) {
                if (!std::isfinite(losses[i]))
                    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                        std::to_string(step));
                epoch_loss += losses[i];
                for (std::size_t p = 0; p < accum.size(); ++p)
                    for (std::size_t j = 0; j < accum[p].size(); ++j) accum[p][j] += per[i][p][j];
                ++in_batch;
            }
            if (in_batch >= cfg.effective_batch) apply_step();
        }
        if (in_batch > 0) apply_step();
        record(epoch, epoch_loss / static_cast<double>(samples.size()), lr);
    }
    result.network = std::move(net);
    return result;
}

// ---------------------------------------------------------------------------
// Inference

/// Center-frame logits for a window of T raw cubes, in (R, A, E) layout.
inline std::vector<double> forward(const Network& net, std::span<const RadarCubePair> window) {
    if (window.size() != net.config.temporal_window)
        throw ValidationError("window", "expected " + std::to_string(net.config.temporal_window) + " frames");
    std::vector<FrameInput> inputs;
    for (const auto& c : window) {
        if (!(c.geometry == net.geometry)) throw ValidationError("geometry", "cube does not match the network geometry");
        inputs.push_back(prepare_input(c));
    }
    std::vector<const FrameInput*> ptrs;
    for (const auto& i : inputs) ptrs.push_back(&i);
    return to_grid_layout(forward_window(net, ptrs));
}

struct InferenceResult {
    std::vector<OccupancyGrid> grids;
    double empty_fraction = 0.0;  // frames with no voxel above 50% confidence
};

/// Detection iff sigmoid(logit) > 0.5 (logit > 0). The first and last T/2
/// frames use edge-replicated windows.
inline InferenceResult infer(const Network& net, std::span<const RadarCubePair> frames) {
    if (frames.empty()) throw ValidationError("frames", "need at least one frame");
    for (const auto& c : frames)
        if (!(c.geometry == net.geometry)) throw ValidationError("geometry", "cube does not match the network geometry");
    std::vector<FrameInput> inputs(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) { inputs[i] = prepare_input(frames[i]); });

    InferenceResult out;
    out.grids.resize(frames.size());
    parallel_for(frames.size(), [&](std::size_t i) {
        std::vector<const FrameInput*> w;
        for (std::size_t j : window_indices(i, frames.size(), net.config.temporal_window)) w.push_back(&inputs[j]);
        const auto logits = to_grid_layout(forward_window(net, w));
        OccupancyGrid g(net.geometry, frames[i].frame_id);
        for (std::size_t v = 0; v < logits.size(); ++v) g.occupancy[v] = sigmoid(logits[v]) > 0.5 ? 1 : 0;
        out.grids[i] = std::move(g);
    });
    std::size_t empty = 0;
    for (const auto& g : out.grids) empty += g.empty();
    out.empty_fraction = static_cast<double>(empty) / static_cast<double>(out.grids.size());
    return out;
}

}  // namespace radarpc::nn
