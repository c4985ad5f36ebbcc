#pragma once

#include "times2d/kernels.hpp"
#include "times2d/tensor.hpp"

#include <cmath>
#include <functional>
#include <utility>

namespace times2d {

enum class Pad { Same, Valid };

namespace detail {

template <typename T>
void check_finite(const char* op, const Tensor<T>& t) {
    if (!debug_checks_enabled()) return;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(static_cast<double>(t.data()[i])))
            throw ShapeError(std::string(op) + ": non-finite value produced at flat index " +
                             std::to_string(i));
    }
}

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

/// Common op epilogue: propagate requires_grad, record on the active tape,
/// run the debug finiteness check.
template <typename T, typename Fn>
void finish(const char* op, Tensor<T>& out, bool any_requires, Fn&& backward_fn) {
    out.set_requires_grad(any_requires);
    if (auto* tape = GradientTape<T>::current(); tape && any_requires)
        tape->record(op, out.id(), std::function<void()>(std::forward<Fn>(backward_fn)));
    check_finite(op, out);
}

template <typename T>
void accumulate_into(const Tensor<T>& t, const std::vector<T>& g) {
    kernels::accumulate(g.data(), t.grad().data(), g.size());
}

inline int normalize_axis(int axis, std::size_t rank, const char* op) {
    int r = static_cast<int>(rank);
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        throw ShapeError(std::string(op) + ": axis out of range for rank " + std::to_string(rank));
    return axis;
}

// Exact (erf-based) GELU and its derivative.
template <typename T> inline T gelu_value(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752440)));
}
template <typename T> inline T gelu_derivative(T x) {
    const T phi = std::exp(T(-0.5) * x * x) * T(0.39894228040143267794); // N(0,1) pdf
    const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.70710678118654752440)));
    return cdf + x * phi;
}

struct ConvDims {
    std::size_t B, C_in, H, W, C_out, kh, kw, ph, pw, H_out, W_out;
};

/// Visits every (input-row, output-row, kernel-tap) triple whose width
/// overlap is non-empty; the inner work stays a contiguous row operation.
template <typename F>
void conv2d_for_each_row(const ConvDims& d, F&& row_action) {
    for (std::size_t b = 0; b < d.B; ++b)
        for (std::size_t co = 0; co < d.C_out; ++co)
            for (std::size_t ci = 0; ci < d.C_in; ++ci)
                for (std::size_t ky = 0; ky < d.kh; ++ky)
                    for (std::size_t kx = 0; kx < d.kw; ++kx)
                        for (std::size_t oy = 0; oy < d.H_out; ++oy) {
                            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) -
                                                      static_cast<std::ptrdiff_t>(d.ph);
                            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(d.H)) continue;
                            const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) -
                                                         static_cast<std::ptrdiff_t>(d.pw);
                            const std::size_t ox0 = shift < 0 ? static_cast<std::size_t>(-shift) : 0;
                            const std::ptrdiff_t ox_end_s = static_cast<std::ptrdiff_t>(d.W) - shift;
                            const std::size_t ox_end =
                                ox_end_s < 0 ? 0
                                             : (static_cast<std::size_t>(ox_end_s) < d.W_out
                                                    ? static_cast<std::size_t>(ox_end_s)
                                                    : d.W_out);
                            if (ox0 >= ox_end) continue;
                            const std::size_t len = ox_end - ox0;
                            const std::size_t x_off =
                                ((b * d.C_in + ci) * d.H + static_cast<std::size_t>(iy)) * d.W +
                                static_cast<std::size_t>(static_cast<std::ptrdiff_t>(ox0) + shift);
                            const std::size_t o_off =
                                ((b * d.C_out + co) * d.H_out + oy) * d.W_out + ox0;
                            const std::size_t w_off = ((co * d.C_in + ci) * d.kh + ky) * d.kw + kx;
                            row_action(x_off, o_off, w_off, len);
                        }
}

} // namespace detail

// ---------------------------------------------------------------------------
// elementwise (shapes must match exactly; the only broadcast is scalar-tensor)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("add", a, b);
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::add(a.data(), b.data(), out.data(), a.size());
    bool rg = a.requires_grad() || b.requires_grad();
    detail::finish("add", out, rg, [a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        if (a.requires_grad()) detail::accumulate_into(a, g);
        if (b.requires_grad()) detail::accumulate_into(b, g);
    });
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, T s) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + s;
    detail::finish("add_scalar", out, a.requires_grad(), [a, out]() mutable {
        if (!out.has_grad()) return;
        detail::accumulate_into(a, out.grad());
    });
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("sub", a, b);
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::sub(a.data(), b.data(), out.data(), a.size());
    bool rg = a.requires_grad() || b.requires_grad();
    detail::finish("sub", out, rg, [a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        if (a.requires_grad()) detail::accumulate_into(a, g);
        if (b.requires_grad()) kernels::axpy(T(-1), g.data(), b.grad().data(), g.size());
    });
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("mul", a, b);
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::mul(a.data(), b.data(), out.data(), a.size());
    bool rg = a.requires_grad() || b.requires_grad();
    detail::finish("mul", out, rg, [a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        std::vector<T> tmp(g.size());
        if (a.requires_grad()) {
            kernels::mul(g.data(), b.data(), tmp.data(), g.size());
            kernels::accumulate(tmp.data(), a.grad().data(), g.size());
        }
        if (b.requires_grad()) {
            kernels::mul(g.data(), a.data(), tmp.data(), g.size());
            kernels::accumulate(tmp.data(), b.grad().data(), g.size());
        }
    });
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, T s) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::scale(a.data(), s, out.data(), a.size());
    detail::finish("mul_scalar", out, a.requires_grad(), [a, out, s]() mutable {
        if (!out.has_grad()) return;
        kernels::axpy(s, out.grad().data(), a.grad().data(), out.size());
    });
    return out;
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("div", a, b);
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::div(a.data(), b.data(), out.data(), a.size());
    bool rg = a.requires_grad() || b.requires_grad();
    detail::finish("div", out, rg, [a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        if (a.requires_grad()) {
            auto& ga = a.grad();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / b.data()[i];
        }
        if (b.requires_grad()) {
            auto& gb = b.grad();
            for (std::size_t i = 0; i < g.size(); ++i) {
                T bi = b.data()[i];
                gb[i] -= g[i] * a.data()[i] / (bi * bi);
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = std::abs(a.data()[i]);
    detail::finish("abs", out, a.requires_grad(), [a, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            T x = a.data()[i];
            // subgradient 0 at x == 0
            ga[i] += g[i] * (x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)));
        }
    });
    return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = detail::gelu_value(a.data()[i]);
    detail::finish("gelu", out, a.requires_grad(), [a, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            ga[i] += g[i] * detail::gelu_derivative(a.data()[i]);
    });
    return out;
}

/// max(a, floor) elementwise; gradient passes only where a > floor.
template <typename T>
Tensor<T> clamp_min(const Tensor<T>& a, T floor) {
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.data()[i] = a.data()[i] > floor ? a.data()[i] : floor;
    detail::finish("clamp_min", out, a.requires_grad(), [a, out, floor]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        auto& ga = a.grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (a.data()[i] > floor) ga[i] += g[i];
    });
    return out;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

/// c[m,n] = a[m,k] * b[k,n]. Gradients: da = g*b^T, db = a^T*g.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor<T> out = Tensor<T>::zeros({m, n});
    kernels::matmul(a.data(), b.data(), out.data(), m, k, n);
    bool rg = a.requires_grad() || b.requires_grad();
    detail::finish("matmul", out, rg, [a, b, out, m, k, n]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad().data();
        if (a.requires_grad()) {
            T* ga = a.grad().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t kk = 0; kk < k; ++kk)
                    ga[i * k + kk] += kernels::dot(g + i * n, b.data() + kk * n, n);
        }
        if (b.requires_grad()) {
            T* gb = b.grad().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t kk = 0; kk < k; ++kk)
                    kernels::axpy(a.data()[i * k + kk], g + i * n, gb + kk * n, n);
        }
    });
    return out;
}

/// Batched variant: [G,m,k] x [G,k,n] -> [G,m,n].
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.shape()[0] != b.shape()[0] ||
        a.shape()[2] != b.shape()[1])
        throw ShapeError("bmm: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    const std::size_t G = a.shape()[0], m = a.shape()[1], k = a.shape()[2], n = b.shape()[2];
    Tensor<T> out = Tensor<T>::zeros({G, m, n});
    for (std::size_t gidx = 0; gidx < G; ++gidx)
        kernels::matmul(a.data() + gidx * m * k, b.data() + gidx * k * n,
                        out.data() + gidx * m * n, m, k, n);
    bool rg = a.requires_grad() || b.requires_grad();
    detail::finish("bmm", out, rg, [a, b, out, G, m, k, n]() mutable {
        if (!out.has_grad()) return;
        for (std::size_t gi = 0; gi < G; ++gi) {
            const T* g = out.grad().data() + gi * m * n;
            const T* ad = a.data() + gi * m * k;
            const T* bd = b.data() + gi * k * n;
            if (a.requires_grad()) {
                T* ga = a.grad().data() + gi * m * k;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk)
                        ga[i * k + kk] += kernels::dot(g + i * n, bd + kk * n, n);
            }
            if (b.requires_grad()) {
                T* gb = b.grad().data() + gi * k * n;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk)
                        kernels::axpy(ad[i * k + kk], g + i * n, gb + kk * n, n);
            }
        }
    });
    return out;
}

/// x[..., n] + b[n]; the bias gradient sums over leading axes.
template <typename T>
Tensor<T> bias_add(const Tensor<T>& x, const Tensor<T>& b) {
    if (b.rank() != 1 || x.rank() < 1 || x.shape().back() != b.shape()[0])
        throw ShapeError("bias_add: bias " + shape_str(b.shape()) +
                         " does not match last axis of " + shape_str(x.shape()));
    const std::size_t n = b.size();
    const std::size_t rows = x.size() / n;
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    for (std::size_t r = 0; r < rows; ++r)
        kernels::add(x.data() + r * n, b.data(), out.data() + r * n, n);
    bool rg = x.requires_grad() || b.requires_grad();
    detail::finish("bias_add", out, rg, [x, b, out, rows, n]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        if (x.requires_grad()) detail::accumulate_into(x, g);
        if (b.requires_grad()) {
            T* gb = b.grad().data();
            for (std::size_t r = 0; r < rows; ++r) kernels::accumulate(g.data() + r * n, gb, n);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// conv2d (stride 1, zero padding)
// ---------------------------------------------------------------------------

/// Cross-correlation with zero padding, stride 1.
/// input [B,C_in,H,W], kernel [C_out,C_in,kh,kw] -> [B,C_out,H',W'].
/// `same` keeps the spatial size (asymmetric padding for even kernels).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, Pad pad) {
    if (input.rank() != 4 || kernel.rank() != 4)
        throw ShapeError("conv2d: expected rank-4 input and kernel, got " +
                         shape_str(input.shape()) + " and " + shape_str(kernel.shape()));
    const std::size_t B = input.shape()[0], C_in = input.shape()[1];
    const std::size_t H = input.shape()[2], W = input.shape()[3];
    const std::size_t C_out = kernel.shape()[0], kh = kernel.shape()[2], kw = kernel.shape()[3];
    if (kernel.shape()[1] != C_in)
        throw ShapeError("conv2d: kernel channels " + shape_str(kernel.shape()) +
                         " do not match input " + shape_str(input.shape()));
    if (kh > H + (pad == Pad::Same ? kh - 1 : 0) || kw > W + (pad == Pad::Same ? kw - 1 : 0))
        throw ShapeError("conv2d: kernel " + shape_str(kernel.shape()) +
                         " larger than padded input " + shape_str(input.shape()));
    const detail::ConvDims dims{B,
                                C_in,
                                H,
                                W,
                                C_out,
                                kh,
                                kw,
                                pad == Pad::Same ? (kh - 1) / 2 : 0,
                                pad == Pad::Same ? (kw - 1) / 2 : 0,
                                pad == Pad::Same ? H : H - kh + 1,
                                pad == Pad::Same ? W : W - kw + 1};

    Tensor<T> out = Tensor<T>::zeros({B, C_out, dims.H_out, dims.W_out});
    const T* xd = input.data();
    const T* wd = kernel.data();
    T* od = out.data();
    detail::conv2d_for_each_row(
        dims, [&](std::size_t x_off, std::size_t o_off, std::size_t w_off, std::size_t len) {
            kernels::axpy(wd[w_off], xd + x_off, od + o_off, len);
        });

    bool rg = input.requires_grad() || kernel.requires_grad();
    detail::finish("conv2d", out, rg, [input, kernel, out, dims]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad().data();
        const bool need_gx = input.requires_grad();
        const bool need_gw = kernel.requires_grad();
        T* gx = need_gx ? input.grad().data() : nullptr;
        T* gw = need_gw ? kernel.grad().data() : nullptr;
        const T* xd2 = input.data();
        const T* wd2 = kernel.data();
        detail::conv2d_for_each_row(
            dims, [&](std::size_t x_off, std::size_t o_off, std::size_t w_off, std::size_t len) {
                if (need_gx) kernels::axpy(wd2[w_off], g + o_off, gx + x_off, len);
                if (need_gw) gw[w_off] += kernels::dot(xd2 + x_off, g + o_off, len);
            });
    });
    return out;
}

// ---------------------------------------------------------------------------
// softmax / layer_norm
// ---------------------------------------------------------------------------

/// Max-subtracted softmax along `axis` (negative axes count from the end).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis_in) {
    const int axis = detail::normalize_axis(axis_in, x.rank(), "softmax");
    const Shape& s = x.shape();
    const std::size_t L = s[static_cast<std::size_t>(axis)];
    std::size_t inner = 1, outer = 1;
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) inner *= s[i];
    for (std::size_t i = 0; i < static_cast<std::size_t>(axis); ++i) outer *= s[i];

    Tensor<T> out = Tensor<T>::zeros(s);
    const T* xd = x.data();
    T* od = out.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * L * inner + in;
            T mx = xd[base];
            for (std::size_t l = 1; l < L; ++l) mx = std::max(mx, xd[base + l * inner]);
            T denom = T(0);
            for (std::size_t l = 0; l < L; ++l) {
                T e = std::exp(xd[base + l * inner] - mx);
                od[base + l * inner] = e;
                denom += e;
            }
            for (std::size_t l = 0; l < L; ++l) od[base + l * inner] /= denom;
        }
    }
    detail::finish("softmax", out, x.requires_grad(), [x, out, L, inner, outer]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad().data();
        const T* y = out.data();
        T* gx = x.grad().data();
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = o * L * inner + in;
                T dotgy = T(0);
                for (std::size_t l = 0; l < L; ++l)
                    dotgy += g[base + l * inner] * y[base + l * inner];
                for (std::size_t l = 0; l < L; ++l) {
                    const std::size_t i = base + l * inner;
                    gx[i] += y[i] * (g[i] - dotgy);
                }
            }
    });
    return out;
}

/// Normalization over the last axis to mean 0 / variance 1, then affine.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
    if (x.rank() < 1 || gamma.rank() != 1 || beta.rank() != 1 ||
        gamma.shape()[0] != x.shape().back() || beta.shape()[0] != x.shape().back())
        throw ShapeError("layer_norm: gamma/beta must match last axis of " + shape_str(x.shape()));
    if (!(eps > T(0))) throw ShapeError("layer_norm: eps must be positive");
    const std::size_t D = x.shape().back();
    const std::size_t rows = x.size() / D;

    Tensor<T> out = Tensor<T>::zeros(x.shape());
    std::vector<T> inv_std(rows), xhat(x.size());
    const T* xd = x.data();
    T* od = out.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = xd + r * D;
        T mu = kernels::sum(row, D) / static_cast<T>(D);
        T var = T(0);
        for (std::size_t j = 0; j < D; ++j) {
            T d = row[j] - mu;
            var += d * d;
        }
        var /= static_cast<T>(D);
        const T inv = T(1) / std::sqrt(var + eps);
        inv_std[r] = inv;
        for (std::size_t j = 0; j < D; ++j) {
            const T xh = (row[j] - mu) * inv;
            xhat[r * D + j] = xh;
            od[r * D + j] = gamma.data()[j] * xh + beta.data()[j];
        }
    }
    bool rg = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
    detail::finish("layer_norm", out, rg,
                   [x, gamma, beta, out, rows, D, inv_std = std::move(inv_std),
                    xhat = std::move(xhat)]() mutable {
                       if (!out.has_grad()) return;
                       const T* g = out.grad().data();
                       const bool need_gx = x.requires_grad();
                       const bool need_gg = gamma.requires_grad();
                       const bool need_gb = beta.requires_grad();
                       T* gg = need_gg ? gamma.grad().data() : nullptr;
                       T* gb = need_gb ? beta.grad().data() : nullptr;
                       T* gx = need_gx ? x.grad().data() : nullptr;
                       for (std::size_t r = 0; r < rows; ++r) {
                           const T* grow = g + r * D;
                           const T* xh = xhat.data() + r * D;
                           if (need_gg)
                               for (std::size_t j = 0; j < D; ++j) gg[j] += grow[j] * xh[j];
                           if (need_gb)
                               for (std::size_t j = 0; j < D; ++j) gb[j] += grow[j];
                           if (need_gx) {
                               // gx = inv_std * (gp - mean(gp) - xhat * mean(gp . xhat)),
                               // where gp = gamma .* g
                               T mean_gp = T(0), mean_gpx = T(0);
                               for (std::size_t j = 0; j < D; ++j) {
                                   const T gp = grow[j] * gamma.data()[j];
                                   mean_gp += gp;
                                   mean_gpx += gp * xh[j];
                               }
                               mean_gp /= static_cast<T>(D);
                               mean_gpx /= static_cast<T>(D);
                               for (std::size_t j = 0; j < D; ++j) {
                                   const T gp = grow[j] * gamma.data()[j];
                                   gx[r * D + j] += inv_std[r] * (gp - mean_gp - xh[j] * mean_gpx);
                               }
                           }
                       }
                   });
    return out;
}

// ---------------------------------------------------------------------------
// structural ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (shape_numel(shape) != x.size())
        throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " +
                         shape_str(shape));
    Tensor<T> out = Tensor<T>::from_data(std::move(shape), x.values());
    detail::finish("reshape", out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        detail::accumulate_into(x, out.grad());
    });
    return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<std::size_t>& axes) {
    const Shape& s = x.shape();
    if (axes.size() != s.size())
        throw ShapeError("permute: axes rank mismatch for " + shape_str(s));
    std::vector<bool> seen(s.size(), false);
    Shape out_shape(s.size());
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i] >= s.size() || seen[axes[i]])
            throw ShapeError("permute: invalid axis list for " + shape_str(s));
        seen[axes[i]] = true;
        out_shape[i] = s[axes[i]];
    }
    const auto in_strides = row_major_strides(s);
    const std::size_t rank = s.size();

    Tensor<T> out = Tensor<T>::zeros(out_shape);
    T* od = out.data();
    const T* xd = x.data();
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t d = 0; d < rank; ++d) src += idx[d] * in_strides[axes[d]];
        od[flat] = xd[src];
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < out_shape[d]) break;
            idx[d] = 0;
        }
    }
    detail::finish("permute", out, x.requires_grad(),
                   [x, out, axes, in_strides, out_shape]() mutable {
                       if (!out.has_grad()) return;
                       const std::size_t rank = out_shape.size();
                       const auto& g = out.grad();
                       T* gx = x.grad().data();
                       std::vector<std::size_t> idx(rank, 0);
                       for (std::size_t flat = 0; flat < g.size(); ++flat) {
                           std::size_t src = 0;
                           for (std::size_t d = 0; d < rank; ++d) src += idx[d] * in_strides[axes[d]];
                           gx[src] += g[flat];
                           for (std::size_t d = rank; d-- > 0;) {
                               if (++idx[d] < out_shape[d]) break;
                               idx[d] = 0;
                           }
                       }
                   });
    return out;
}

/// Zero padding; pads[i] = {before, after} for axis i.
template <typename T>
Tensor<T> pad_zero(const Tensor<T>& x,
                   const std::vector<std::pair<std::size_t, std::size_t>>& pads) {
    const Shape& s = x.shape();
    if (pads.size() != s.size())
        throw ShapeError("pad: pad spec rank mismatch for " + shape_str(s));
    Shape out_shape(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out_shape[i] = s[i] + pads[i].first + pads[i].second;
    std::vector<std::size_t> starts(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) starts[i] = pads[i].first;

    Tensor<T> out = Tensor<T>::zeros(out_shape);
    const auto out_strides = row_major_strides(out_shape);
    const std::size_t rank = s.size();
    T* od = out.data();
    const T* xd = x.data();
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        std::size_t dst = 0;
        for (std::size_t d = 0; d < rank; ++d) dst += (idx[d] + starts[d]) * out_strides[d];
        od[dst] = xd[flat];
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < s[d]) break;
            idx[d] = 0;
        }
    }
    detail::finish("pad", out, x.requires_grad(), [x, out, starts, out_strides]() mutable {
        if (!out.has_grad()) return;
        const Shape& s = x.shape();
        const std::size_t rank = s.size();
        const auto& g = out.grad();
        T* gx = x.grad().data();
        std::vector<std::size_t> idx(rank, 0);
        for (std::size_t flat = 0; flat < x.size(); ++flat) {
            std::size_t src = 0;
            for (std::size_t d = 0; d < rank; ++d) src += (idx[d] + starts[d]) * out_strides[d];
            gx[flat] += g[src];
            for (std::size_t d = rank; d-- > 0;) {
                if (++idx[d] < s[d]) break;
                idx[d] = 0;
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, const std::vector<std::size_t>& starts,
                const std::vector<std::size_t>& sizes) {
    const Shape& s = x.shape();
    if (starts.size() != s.size() || sizes.size() != s.size())
        throw ShapeError("slice: spec rank mismatch for " + shape_str(s));
    for (std::size_t i = 0; i < s.size(); ++i)
        if (sizes[i] == 0 || starts[i] + sizes[i] > s[i])
            throw ShapeError("slice: window out of bounds for " + shape_str(s));
    const auto in_strides = row_major_strides(s);
    const std::size_t rank = s.size();

    Tensor<T> out = Tensor<T>::zeros(Shape(sizes));
    T* od = out.data();
    const T* xd = x.data();
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t d = 0; d < rank; ++d) src += (idx[d] + starts[d]) * in_strides[d];
        od[flat] = xd[src];
        for (std::size_t d = rank; d-- > 0;) {
            if (++idx[d] < sizes[d]) break;
            idx[d] = 0;
        }
    }
    detail::finish("slice", out, x.requires_grad(), [x, out, starts, sizes, in_strides]() mutable {
        if (!out.has_grad()) return;
        const std::size_t rank = sizes.size();
        const auto& g = out.grad();
        T* gx = x.grad().data();
        std::vector<std::size_t> idx(rank, 0);
        for (std::size_t flat = 0; flat < g.size(); ++flat) {
            std::size_t src = 0;
            for (std::size_t d = 0; d < rank; ++d) src += (idx[d] + starts[d]) * in_strides[d];
            gx[src] += g[flat];
            for (std::size_t d = rank; d-- > 0;) {
                if (++idx[d] < sizes[d]) break;
                idx[d] = 0;
            }
        }
    });
    return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: empty tensor list");
    const Shape& s0 = parts[0].shape();
    if (axis >= s0.size()) throw ShapeError("concat: axis out of range for " + shape_str(s0));
    Shape out_shape = s0;
    std::size_t axis_total = 0;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != s0.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t d = 0; d < s.size(); ++d)
            if (d != axis && s[d] != s0[d])
                throw ShapeError("concat: shape mismatch " + shape_str(s) + " vs " + shape_str(s0));
        axis_total += s[axis];
    }
    out_shape[axis] = axis_total;

    std::size_t outer = 1, inner = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
    for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];

    Tensor<T> out = Tensor<T>::zeros(out_shape);
    T* od = out.data();
    std::size_t axis_off = 0;
    for (const auto& p : parts) {
        const std::size_t pa = p.shape()[axis];
        const T* pd = p.data();
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t dst = (o * axis_total + axis_off) * inner;
            const std::size_t src = o * pa * inner;
            for (std::size_t i = 0; i < pa * inner; ++i) od[dst + i] = pd[src + i];
        }
        axis_off += pa;
    }
    bool rg = false;
    for (const auto& p : parts) rg = rg || p.requires_grad();
    detail::finish("concat", out, rg, [parts, out, axis, outer, inner, axis_total]() mutable {
        if (!out.has_grad()) return;
        const T* g = out.grad().data();
        std::size_t axis_off = 0;
        for (auto& p : parts) {
            const std::size_t pa = p.shape()[axis];
            if (p.requires_grad()) {
                T* gp = p.grad().data();
                for (std::size_t o = 0; o < outer; ++o) {
                    const std::size_t src = (o * axis_total + axis_off) * inner;
                    kernels::accumulate(g + src, gp + o * pa * inner, pa * inner);
                }
            }
            axis_off += pa;
        }
    });
    return out;
}

/// Stacks equal-shape tensors along a fresh axis.
template <typename T>
Tensor<T> stack(const std::vector<Tensor<T>>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("stack: empty tensor list");
    const Shape& s0 = parts[0].shape();
    if (axis > s0.size()) throw ShapeError("stack: axis out of range");
    for (const auto& p : parts)
        if (p.shape() != s0)
            throw ShapeError("stack: shape mismatch " + shape_str(p.shape()) + " vs " +
                             shape_str(s0));
    Shape unsq = s0;
    unsq.insert(unsq.begin() + static_cast<std::ptrdiff_t>(axis), 1);
    std::vector<Tensor<T>> reshaped;
    reshaped.reserve(parts.size());
    for (const auto& p : parts) reshaped.push_back(reshape(p, unsq));
    return concat(reshaped, axis);
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    Tensor<T> out = Tensor<T>::scalar(kernels::sum(x.data(), x.size()));
    detail::finish("sum", out, x.requires_grad(), [x, out]() mutable {
        if (!out.has_grad()) return;
        const T g = out.grad()[0];
        T* gx = x.grad().data();
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g;
    });
    return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
    const T inv_n = T(1) / static_cast<T>(x.size());
    Tensor<T> out = Tensor<T>::scalar(kernels::sum(x.data(), x.size()) * inv_n);
    detail::finish("mean", out, x.requires_grad(), [x, out, inv_n]() mutable {
        if (!out.has_grad()) return;
        const T g = out.grad()[0] * inv_n;
        T* gx = x.grad().data();
        for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g;
    });
    return out;
}

// ---------------------------------------------------------------------------
// finite differences
// ---------------------------------------------------------------------------

/// Central-difference validation of reverse-mode gradients. Evaluates f under
/// a fresh tape for the analytic gradient of x, then re-evaluates f twice per
/// element with x perturbed in place by +/-h. Returns the max over elements of
/// |analytic - numeric| / max(|analytic|, 1e-8). f must be deterministic and
/// is free to ignore its argument as long as it reads x's storage.
template <typename T>
double finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f, Tensor<T>& x, T h) {
    if (!(h > T(0))) throw ShapeError("finite_diff_check: h must be positive");
    const bool was_rg = x.requires_grad();
    x.set_requires_grad(true);
    x.zero_grad();

    std::vector<T> analytic;
    {
        GradientTape<T> tape;
        typename GradientTape<T>::Scope scope(tape);
        Tensor<T> loss = f(x);
        tape.backward(loss);
        analytic = x.grad();
        if (analytic.empty()) analytic.assign(x.size(), T(0));
    }
    x.zero_grad();

    double max_rel = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const T saved = x.data()[i];
        x.data()[i] = saved + h;
        const double up = static_cast<double>(f(x).item());
        x.data()[i] = saved - h;
        const double down = static_cast<double>(f(x).item());
        x.data()[i] = saved;
        const double numeric = (up - down) / (2.0 * static_cast<double>(h));
        const double a = static_cast<double>(analytic[i]);
        const double rel = std::abs(a - numeric) / std::max(std::abs(a), 1e-8);
        max_rel = std::max(max_rel, rel);
    }
    x.set_requires_grad(was_rg);
    return max_rel;
}

} // namespace times2d
