#pragma once

// Central finite-difference gradient check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "radarpc/util.hpp"

namespace radarpc::nn {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

/// Compares `analytic` with central differences of `loss` over `params`
/// (step 1e-5). At most `max_samples` coordinates are checked, chosen by a
/// seeded shuffle. Error per coordinate is |a - n| / max(|a|, |n|, 1e-8).
inline GradCheckResult grad_check(const std::function<double()>& loss, std::span<double> params,
                                  std::span<const double> analytic, std::size_t max_samples = 64,
                                  std::uint64_t seed = 1, double step = 1e-5) {
    if (params.size() != analytic.size()) throw ValidationError("grad_check", "gradient size mismatch");
    std::vector<std::size_t> idx(params.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(idx);
    if (idx.size() > max_samples) idx.resize(max_samples);

    GradCheckResult r;
    for (std::size_t i : idx) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = loss();
        params[i] = saved - step;
        const double down = loss();
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic[i];
        const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
        if (err > r.max_relative_error || r.checked == 0) {
            r.max_relative_error = std::max(r.max_relative_error, err);
            if (err >= r.max_relative_error) r.worst_index = i;
        }
        ++r.checked;
    }
    return r;
}

}  // namespace radarpc::nn
