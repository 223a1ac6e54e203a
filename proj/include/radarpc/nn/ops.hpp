#pragma once

// Differentiable operators with explicit backward passes.
//
// Layouts: conv1d works on (N, C, L) batches; conv2d on (C, H, W) maps;
// conv3d on (C, D0, D1, D2) volumes. 2-D and 3-D convolutions use odd
// square kernels with "same" zero padding. Backward functions accumulate
// (+=) into the gradient tensors they are given.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "radarpc/nn/tensor.hpp"

namespace radarpc::nn {

// ---------------------------------------------------------------------------
// 1-D convolution over the last axis of (N, Cin, L)

inline std::size_t conv1d_out_len(std::size_t len, std::size_t k, std::size_t pad) { return len + 2 * pad - k + 1; }

inline Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t pad) {
    const std::size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin) throw ValidationError("conv1d", "weight/input channel mismatch");
    const std::size_t lout = conv1d_out_len(len, k, pad);
    Tensor y({n, cout, lout});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t co = 0; co < cout; ++co) {
            double* out = y.ptr() + (s * cout + co) * lout;
            std::fill(out, out + lout, b[co]);
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double* in = x.ptr() + (s * cin + ci) * len;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double wv = w[(co * cin + ci) * k + kk];
                    // output l reads input l + kk - pad
                    const std::size_t l0 = pad > kk ? pad - kk : 0;
                    const std::size_t l1 = std::min(lout, len + pad - kk);
                    for (std::size_t l = l0; l < l1; ++l) out[l] += wv * in[l + kk - pad];
                }
            }
        }
    return y;
}

inline void conv1d_backward(const Tensor& x, const Tensor& w, std::size_t pad, const Tensor& dy, Tensor* dx,
                            Tensor& dw, Tensor& db) {
    const std::size_t n = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    const std::size_t lout = dy.dim(2);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t co = 0; co < cout; ++co) {
            const double* g = dy.ptr() + (s * cout + co) * lout;
            double bsum = 0.0;
            for (std::size_t l = 0; l < lout; ++l) bsum += g[l];
            db[co] += bsum;
            for (std::size_t ci = 0; ci < cin; ++ci) {
                const double* in = x.ptr() + (s * cin + ci) * len;
                double* gin = dx ? dx->ptr() + (s * cin + ci) * len : nullptr;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double wv = w[(co * cin + ci) * k + kk];
                    const std::size_t l0 = pad > kk ? pad - kk : 0;
                    const std::size_t l1 = std::min(lout, len + pad - kk);
                    double acc = 0.0;
                    for (std::size_t l = l0; l < l1; ++l) acc += g[l] * in[l + kk - pad];
                    dw[(co * cin + ci) * k + kk] += acc;
                    if (gin)
                        for (std::size_t l = l0; l < l1; ++l) gin[l + kk - pad] += wv * g[l];
                }
            }
        }
}

// ---------------------------------------------------------------------------
// 2-D convolution, (Cin, H, W) -> (Cout, H, W)

inline Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin) throw ValidationError("conv2d", "weight/input channel mismatch");
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(wd);
    Tensor y({cout, h, wd});
    for (std::size_t co = 0; co < cout; ++co) {
        double* out = y.ptr() + co * h * wd;
        std::fill(out, out + h * wd, b[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* in = x.ptr() + ci * h * wd;
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const double wv = w[((co * cin + ci) * k + ky) * k + kx];
                    const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                    const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(H, H - dy);
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(W, W - dx);
                    for (std::ptrdiff_t yy = y0; yy < y1; ++yy) {
                        double* o = out + yy * W;
                        const double* i = in + (yy + dy) * W + dx;
                        for (std::ptrdiff_t xx = x0; xx < x1; ++xx) o[xx] += wv * i[xx];
                    }
                }
        }
    }
    return y;
}

inline void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy_t, Tensor* dx_t, Tensor& dw,
                            Tensor& db) {
    const std::size_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(wd);
    for (std::size_t co = 0; co < cout; ++co) {
        const double* g = dy_t.ptr() + co * h * wd;
        double bsum = 0.0;
        for (std::size_t i = 0; i < h * wd; ++i) bsum += g[i];
        db[co] += bsum;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* in = x.ptr() + ci * h * wd;
            double* gin = dx_t ? dx_t->ptr() + ci * h * wd : nullptr;
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const std::size_t widx = ((co * cin + ci) * k + ky) * k + kx;
                    const double wv = w[widx];
                    const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                    const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy), y1 = std::min(H, H - dy);
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx), x1 = std::min(W, W - dx);
                    double acc = 0.0;
                    for (std::ptrdiff_t yy = y0; yy < y1; ++yy) {
                        const double* gg = g + yy * W;
                        const double* i = in + (yy + dy) * W + dx;
                        for (std::ptrdiff_t xx = x0; xx < x1; ++xx) acc += gg[xx] * i[xx];
                        if (gin) {
                            double* gi = gin + (yy + dy) * W + dx;
                            for (std::ptrdiff_t xx = x0; xx < x1; ++xx) gi[xx] += wv * gg[xx];
                        }
                    }
                    dw[widx] += acc;
                }
        }
    }
}

// ---------------------------------------------------------------------------
// 3-D convolution, (Cin, D0, D1, D2) -> (Cout, D0, D1, D2)

inline Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t cin = x.dim(0);
    const std::ptrdiff_t A = static_cast<std::ptrdiff_t>(x.dim(1)), B = static_cast<std::ptrdiff_t>(x.dim(2)),
                         C = static_cast<std::ptrdiff_t>(x.dim(3));
    const std::size_t vol = x.dim(1) * x.dim(2) * x.dim(3);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != cin) throw ValidationError("conv3d", "weight/input channel mismatch");
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    Tensor y({cout, x.dim(1), x.dim(2), x.dim(3)});
    for (std::size_t co = 0; co < cout; ++co) {
        double* out = y.ptr() + co * vol;
        std::fill(out, out + vol, b[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* in = x.ptr() + ci * vol;
            for (std::size_t ka = 0; ka < k; ++ka)
                for (std::size_t kb = 0; kb < k; ++kb)
                    for (std::size_t kc = 0; kc < k; ++kc) {
                        const double wv = w[(((co * cin + ci) * k + ka) * k + kb) * k + kc];
                        const std::ptrdiff_t da = static_cast<std::ptrdiff_t>(ka) - pad;
                        const std::ptrdiff_t db = static_cast<std::ptrdiff_t>(kb) - pad;
                        const std::ptrdiff_t dc = static_cast<std::ptrdiff_t>(kc) - pad;
                        const std::ptrdiff_t a0 = std::max<std::ptrdiff_t>(0, -da), a1 = std::min(A, A - da);
                        const std::ptrdiff_t b0 = std::max<std::ptrdiff_t>(0, -db), b1 = std::min(B, B - db);
                        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dc), c1 = std::min(C, C - dc);
                        for (std::ptrdiff_t ia = a0; ia < a1; ++ia)
                            for (std::ptrdiff_t ib = b0; ib < b1; ++ib) {
                                double* o = out + (ia * B + ib) * C;
                                const double* i = in + ((ia + da) * B + (ib + db)) * C + dc;
                                for (std::ptrdiff_t ic = c0; ic < c1; ++ic) o[ic] += wv * i[ic];
                            }
                    }
        }
    }
    return y;
}

inline void conv3d_backward(const Tensor& x, const Tensor& w, const Tensor& dy_t, Tensor* dx_t, Tensor& dw,
                            Tensor& dbias) {
    const std::size_t cin = x.dim(0);
    const std::ptrdiff_t A = static_cast<std::ptrdiff_t>(x.dim(1)), B = static_cast<std::ptrdiff_t>(x.dim(2)),
                         C = static_cast<std::ptrdiff_t>(x.dim(3));
    const std::size_t vol = x.dim(1) * x.dim(2) * x.dim(3);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
    for (std::size_t co = 0; co < cout; ++co) {
        const double* g = dy_t.ptr() + co * vol;
        double bsum = 0.0;
        for (std::size_t i = 0; i < vol; ++i) bsum += g[i];
        dbias[co] += bsum;
        for (std::size_t ci = 0; ci < cin; ++ci) {
            const double* in = x.ptr() + ci * vol;
            double* gin = dx_t ? dx_t->ptr() + ci * vol : nullptr;
            for (std::size_t ka = 0; ka < k; ++ka)
                for (std::size_t kb = 0; kb < k; ++kb)
                    for (std::size_t kc = 0; kc < k; ++kc) {
                        const std::size_t widx = (((co * cin + ci) * k + ka) * k + kb) * k + kc;
                        const double wv = w[widx];
                        const std::ptrdiff_t da = static_cast<std::ptrdiff_t>(ka) - pad;
                        const std::ptrdiff_t db = static_cast<std::ptrdiff_t>(kb) - pad;
                        const std::ptrdiff_t dc = static_cast<std::ptrdiff_t>(kc) - pad;
                        const std::ptrdiff_t a0 = std::max<std::ptrdiff_t>(0, -da), a1 = std::min(A, A - da);
                        const std::ptrdiff_t b0 = std::max<std::ptrdiff_t>(0, -db), b1 = std::min(B, B - db);
                        const std::ptrdiff_t c0 = std::max<std::ptrdiff_t>(0, -dc), c1 = std::min(C, C - dc);
                        double acc = 0.0;
                        for (std::ptrdiff_t ia = a0; ia < a1; ++ia)
                            for (std::ptrdiff_t ib = b0; ib < b1; ++ib) {
                                const double* gg = g + (ia * B + ib) * C;
                                const std::ptrdiff_t off = ((ia + da) * B + (ib + db)) * C + dc;
                                const double* i = in + off;
                                for (std::ptrdiff_t ic = c0; ic < c1; ++ic) acc += gg[ic] * i[ic];
                                if (gin) {
                                    double* gi = gin + off;
                                    for (std::ptrdiff_t ic = c0; ic < c1; ++ic) gi[ic] += wv * gg[ic];
                                }
                            }
                        dw[widx] += acc;
                    }
        }
    }
}

// ---------------------------------------------------------------------------
// Group normalization over a tensor viewed as (outer, C, inner). Statistics
// of each group pool its C/G channels across all outer and inner positions.

struct GroupNormCache {
    Tensor xhat;
    std::vector<double> rstd;  // per group
};

inline constexpr double kGroupNormEps = 1e-5;

inline Tensor group_norm_forward(const Tensor& x, std::size_t outer, std::size_t channels, std::size_t inner,
                                 std::size_t groups, const Tensor& gamma, const Tensor& beta, GroupNormCache& cache) {
    if (channels % groups != 0) throw ValidationError("groupnorm_groups", "must divide the channel count");
    if (x.size() != outer * channels * inner) throw ValidationError("group_norm", "input size mismatch");
    const std::size_t cpg = channels / groups;
    const double m = static_cast<double>(outer * cpg * inner);
    Tensor y(x.shape);
    cache.xhat = Tensor(x.shape);
    cache.rstd.assign(groups, 0.0);
    for (std::size_t gi = 0; gi < groups; ++gi) {
        double sum = 0.0;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = gi * cpg; c < (gi + 1) * cpg; ++c) {
                const double* p = x.ptr() + (o * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) sum += p[i];
            }
        const double mean = sum / m;
        double var = 0.0;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = gi * cpg; c < (gi + 1) * cpg; ++c) {
                const double* p = x.ptr() + (o * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) var += (p[i] - mean) * (p[i] - mean);
            }
        var /= m;
        const double rstd = 1.0 / std::sqrt(var + kGroupNormEps);
        cache.rstd[gi] = rstd;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = gi * cpg; c < (gi + 1) * cpg; ++c) {
                const std::size_t base = (o * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    const double xh = (x[base + i] - mean) * rstd;
                    cache.xhat[base + i] = xh;
                    y[base + i] = gamma[c] * xh + beta[c];
                }
            }
    }
    return y;
}

inline void group_norm_backward(const GroupNormCache& cache, std::size_t outer, std::size_t channels,
                                std::size_t inner, std::size_t groups, const Tensor& gamma, const Tensor& dy,
                                Tensor* dx, Tensor& dgamma, Tensor& dbeta) {
    const std::size_t cpg = channels / groups;
    const double m = static_cast<double>(outer * cpg * inner);
    for (std::size_t gi = 0; gi < groups; ++gi) {
        double sum_dxh = 0.0, sum_dxh_xh = 0.0;
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = gi * cpg; c < (gi + 1) * cpg; ++c) {
                const std::size_t base = (o * channels + c) * inner;
                double dg = 0.0, dbt = 0.0;
                for (std::size_t i = 0; i < inner; ++i) {
                    const double g = dy[base + i];
                    const double xh = cache.xhat[base + i];
                    dg += g * xh;
                    dbt += g;
                    sum_dxh += g * gamma[c];
                    sum_dxh_xh += g * gamma[c] * xh;
                }
                dgamma[c] += dg;
                dbeta[c] += dbt;
            }
        if (!dx) continue;
        const double rstd = cache.rstd[gi];
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = gi * cpg; c < (gi + 1) * cpg; ++c) {
                const std::size_t base = (o * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    const double dxh = dy[base + i] * gamma[c];
                    (*dx)[base + i] += rstd / m * (m * dxh - sum_dxh - cache.xhat[base + i] * sum_dxh_xh);
                }
            }
    }
}

// ---------------------------------------------------------------------------
// Pointwise

inline Tensor relu_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

/// dx += dy * 1[x > 0]
inline void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0) dx[i] += dy[i];
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline Tensor sigmoid_forward(const Tensor& x) {
    Tensor y(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
    return y;
}

/// dx += dy * s (1 - s), with s the forward output.
inline void sigmoid_backward(const Tensor& y, const Tensor& dy, Tensor& dx) {
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += dy[i] * y[i] * (1.0 - y[i]);
}

/// Residual add; the backward pass routes dy unchanged to both inputs.
inline Tensor add_forward(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) throw ValidationError("add", "shape mismatch");
    Tensor y(a.shape);
    for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
    return y;
}

inline void add_backward(const Tensor& dy, Tensor& da, Tensor& db) {
    for (std::size_t i = 0; i < dy.size(); ++i) {
        da[i] += dy[i];
        db[i] += dy[i];
    }
}

// ---------------------------------------------------------------------------
// 2x spatial resampling on (C, H, W)

/// 2x2 average pooling; odd trailing rows/columns average what is available.
inline Tensor downsample2_forward(const Tensor& x) {
    const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const std::size_t ho = (h + 1) / 2, wo = (w + 1) / 2;
    Tensor y({c, ho, wo});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < ho; ++i)
            for (std::size_t j = 0; j < wo; ++j) {
                double s = 0.0;
                std::size_t n = 0;
                for (std::size_t di = 0; di < 2 && 2 * i + di < h; ++di)
                    for (std::size_t dj = 0; dj < 2 && 2 * j + dj < w; ++dj) {
                        s += x[(ch * h + 2 * i + di) * w + 2 * j + dj];
                        ++n;
                    }
                y[(ch * ho + i) * wo + j] = s / static_cast<double>(n);
            }
    return y;
}

inline void downsample2_backward(const std::vector<std::size_t>& in_shape, const Tensor& dy, Tensor& dx) {
    const std::size_t c = in_shape[0], h = in_shape[1], w = in_shape[2];
    const std::size_t ho = dy.dim(1), wo = dy.dim(2);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < ho; ++i)
            for (std::size_t j = 0; j < wo; ++j) {
                const std::size_t ni = std::min<std::size_t>(2, h - 2 * i), nj = std::min<std::size_t>(2, w - 2 * j);
                const double g = dy[(ch * ho + i) * wo + j] / static_cast<double>(ni * nj);
                for (std::size_t di = 0; di < ni; ++di)
                    for (std::size_t dj = 0; dj < nj; ++dj) dx[(ch * h + 2 * i + di) * w + 2 * j + dj] += g;
            }
}

/// Nearest-neighbour upsampling back to (C, h, w).
inline Tensor upsample2_forward(const Tensor& x, std::size_t h, std::size_t w) {
    const std::size_t c = x.dim(0), hi = x.dim(1), wi = x.dim(2);
    Tensor y({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) y[(ch * h + i) * w + j] = x[(ch * hi + i / 2) * wi + j / 2];
    return y;
}

inline void upsample2_backward(const Tensor& dy, Tensor& dx) {
    const std::size_t c = dy.dim(0), h = dy.dim(1), w = dy.dim(2);
    const std::size_t hi = dx.dim(1), wi = dx.dim(2);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j) dx[(ch * hi + i / 2) * wi + j / 2] += dy[(ch * h + i) * w + j];
}

}  // namespace radarpc::nn
