#pragma once

// Independent reference implementations used as test oracles. Everything in
// this header is deliberately naive and kept separate from the library's
// implementation paths.

#include "times2d/rng.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace oracles {

/// Triple-loop matrix product, accumulating in long double.
inline std::vector<double> matmul_ref(const std::vector<double>& a, const std::vector<double>& b,
                                      std::size_t m, std::size_t k, std::size_t n) {
    std::vector<double> c(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double acc = 0.0L;
            for (std::size_t kk = 0; kk < k; ++kk)
                acc += static_cast<long double>(a[i * k + kk]) * static_cast<long double>(b[kk * n + j]);
            c[i * n + j] = static_cast<double>(acc);
        }
    return c;
}

/// Six-loop cross-correlation with explicit zero padding, stride 1.
inline std::vector<double> conv2d_ref(const std::vector<double>& x, const std::vector<double>& w,
                                      std::size_t B, std::size_t C_in, std::size_t H, std::size_t W,
                                      std::size_t C_out, std::size_t kh, std::size_t kw,
                                      std::size_t ph, std::size_t pw, std::size_t H_out,
                                      std::size_t W_out) {
    std::vector<double> out(B * C_out * H_out * W_out, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < C_out; ++co)
            for (std::size_t oy = 0; oy < H_out; ++oy)
                for (std::size_t ox = 0; ox < W_out; ++ox) {
                    long double acc = 0.0L;
                    for (std::size_t ci = 0; ci < C_in; ++ci)
                        for (std::size_t ky = 0; ky < kh; ++ky)
                            for (std::size_t kx = 0; kx < kw; ++kx) {
                                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) -
                                                          static_cast<std::ptrdiff_t>(ph);
                                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) -
                                                          static_cast<std::ptrdiff_t>(pw);
                                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(H) ||
                                    ix >= static_cast<std::ptrdiff_t>(W))
                                    continue;
                                acc += static_cast<long double>(
                                           x[((b * C_in + ci) * H + iy) * W + ix]) *
                                       static_cast<long double>(
                                           w[((co * C_in + ci) * kh + ky) * kw + kx]);
                            }
                    out[((b * C_out + co) * H_out + oy) * W_out + ox] = static_cast<double>(acc);
                }
    return out;
}

/// O(S^2) direct-summation DFT magnitudes of the non-negative bins.
inline std::vector<double> dft_magnitudes_ref(const std::vector<double>& x) {
    const std::size_t S = x.size();
    std::vector<double> mags(S / 2 + 1);
    for (std::size_t f = 0; f <= S / 2; ++f) {
        long double re = 0.0L, im = 0.0L;
        for (std::size_t t = 0; t < S; ++t) {
            const long double ang = -2.0L * 3.14159265358979323846264338327950288L *
                                    static_cast<long double>(t) * static_cast<long double>(f) /
                                    static_cast<long double>(S);
            re += static_cast<long double>(x[t]) * std::cos(ang);
            im += static_cast<long double>(x[t]) * std::sin(ang);
        }
        mags[f] = static_cast<double>(std::sqrt(re * re + im * im));
    }
    return mags;
}

/// Extended-precision softmax of one row.
inline std::vector<double> softmax_ref(const std::vector<double>& x) {
    long double mx = x[0];
    for (double v : x) mx = std::max(mx, static_cast<long double>(v));
    long double denom = 0.0L;
    std::vector<long double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        e[i] = std::exp(static_cast<long double>(x[i]) - mx);
        denom += e[i];
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<double>(e[i] / denom);
    return out;
}

inline std::vector<double> random_vector(times2d::Rng& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline std::vector<float> random_vector_f(times2d::Rng& rng, std::size_t n, float lo = -1.0f,
                                          float hi = 1.0f) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
    return v;
}

} // namespace oracles
