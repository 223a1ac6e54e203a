#pragma once

// Focal loss for binary voxel occupancy.
//
//   p   = sigmoid(z)
//   p_t = p if y = 1, 1 - p otherwise
//   FL  = -alpha_t (1 - p_t)^gamma log(p_t),  alpha_t = alpha (y = 1), 1 - alpha (y = 0)
//
// The total is the mean over voxels. p is clamped to [eps, 1 - eps].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "radarpc/nn/ops.hpp"

namespace radarpc::nn {

inline constexpr double kProbabilityEps = 1e-12;

/// Per-voxel focal loss and its derivative with respect to the logit.
struct FocalTerm {
    double loss = 0.0;
    double dlogit = 0.0;
};

inline FocalTerm focal_term(double logit, bool positive, double alpha, double gamma) {
    double p = sigmoid(logit);
    p = std::clamp(p, kProbabilityEps, 1.0 - kProbabilityEps);
    FocalTerm t;
    if (positive) {
        const double q = 1.0 - p;
        const double mod = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
        const double logp = std::log(p);
        t.loss = -alpha * mod * logp;
        // d/dz = alpha (1-p)^gamma (gamma p log p - (1 - p))
        t.dlogit = alpha * mod * (gamma * p * logp - q);
    } else {
        const double q = 1.0 - p;
        const double mod = gamma == 0.0 ? 1.0 : std::pow(p, gamma);
        const double logq = std::log(q);
        t.loss = -(1.0 - alpha) * mod * logq;
        // d/dz = (1-alpha) p^gamma (p - gamma (1-p) log(1-p))
        t.dlogit = (1.0 - alpha) * mod * (p - gamma * q * logq);
    }
    return t;
}

struct FocalLoss {
    double loss = 0.0;
    std::vector<double> grad;  // d(mean loss)/d(logit), same layout as the logits
};

inline FocalLoss focal_loss(std::span<const double> logits, std::span<const std::uint8_t> targets, double alpha,
                            double gamma) {
    if (logits.size() != targets.size())
        throw ValidationError("focal_loss", "logits and ground truth differ in size");
    FocalLoss out;
    out.grad.resize(logits.size());
    if (logits.empty()) return out;
    const double inv = 1.0 / static_cast<double>(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const FocalTerm t = focal_term(logits[i], targets[i] != 0, alpha, gamma);
        sum += t.loss;
        out.grad[i] = t.dlogit * inv;
    }
    out.loss = sum * inv;
    return out;
}

/// Mean binary cross-entropy with the same clamping, for reference checks.
inline double binary_cross_entropy(std::span<const double> logits, std::span<const std::uint8_t> targets) {
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double p = std::clamp(sigmoid(logits[i]), kProbabilityEps, 1.0 - kProbabilityEps);
        sum -= targets[i] ? std::log(p) : std::log(1.0 - p);
    }
    return logits.empty() ? 0.0 : sum / static_cast<double>(logits.size());
}

}  // namespace radarpc::nn
