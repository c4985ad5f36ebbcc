#include "times2d/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace times2d {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Iterative radix-2 Cooley-Tukey. n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& v, bool inverse) {
    const std::size_t n = v.size();
    if (n < 2) return;
    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = v[i + j];
                const std::complex<double> t = v[i + j + len / 2] * w;
                v[i + j] = u + t;
                v[i + j + len / 2] = u - t;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& c : v) c *= inv_n;
    }
}

/// Bluestein's chirp-z transform: expresses a length-n DFT as a circular
/// convolution of length >= 2n-1, evaluated with the power-of-two FFT above.
/// The quadratic phase exponent is reduced mod 2n to stay exact.
void fft_bluestein(std::vector<std::complex<double>>& v, bool inverse) {
    const std::size_t n = v.size();
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<std::complex<double>> chirp(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t sq = (i * i) % (2 * n);
        const double ang = (inverse ? kTwoPi : -kTwoPi) * static_cast<double>(sq) /
                           (2.0 * static_cast<double>(n));
        chirp[i] = std::complex<double>(std::cos(ang), std::sin(ang));
    }
    std::vector<std::complex<double>> a(m, {0.0, 0.0}), b(m, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) a[i] = v[i] * chirp[i];
    b[0] = std::conj(chirp[0]);
    for (std::size_t i = 1; i < n; ++i) b[i] = b[m - i] = std::conj(chirp[i]);
    fft_pow2(a, false);
    fft_pow2(b, false);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_pow2(a, true);
    for (std::size_t i = 0; i < n; ++i) v[i] = a[i] * chirp[i];
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& c : v) c *= inv_n;
    }
}

} // namespace

void fft(std::vector<std::complex<double>>& v, bool inverse) {
    if (v.size() < 2) return;
    if (is_pow2(v.size()))
        fft_pow2(v, inverse);
    else
        fft_bluestein(v, inverse);
}

std::vector<double> real_spectrum_magnitudes(const std::vector<double>& series) {
    const std::size_t S = series.size();
    std::vector<std::complex<double>> buf(S);
    for (std::size_t t = 0; t < S; ++t) buf[t] = {series[t], 0.0};
    fft(buf, false);
    std::vector<double> mags(S / 2 + 1);
    for (std::size_t f = 0; f <= S / 2; ++f) mags[f] = std::abs(buf[f]);
    return mags;
}

template <typename T>
Spectrum rfft_magnitude(const Tensor<T>& x) {
    if (x.rank() != 3)
        throw ShapeError("rfft_magnitude: expected [B,S,N], got " + shape_str(x.shape()));
    const std::size_t B = x.shape()[0], S = x.shape()[1], N = x.shape()[2];
    if (S < 4) throw DataError("rfft_magnitude: input too short, need S >= 4, got S = " +
                               std::to_string(S));
    Spectrum spec;
    spec.seq_len = S;
    spec.magnitudes.assign(S / 2 + 1, 0.0);
    std::vector<double> series(S);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t t = 0; t < S; ++t)
                series[t] = static_cast<double>(x.data()[(b * S + t) * N + n]);
            // magnitude first, then average over B and N
            const std::vector<double> mags = real_spectrum_magnitudes(series);
            for (std::size_t f = 0; f < mags.size(); ++f) spec.magnitudes[f] += mags[f];
        }
    const double inv = 1.0 / static_cast<double>(B * N);
    for (double& m : spec.magnitudes) m *= inv;
    return spec;
}

PeriodSet top_k_periods(const Spectrum& spec, std::size_t k) {
    const std::size_t S = spec.seq_len;
    const std::size_t max_k = S / 2;
    if (k < 1 || k > max_k)
        throw ConfigError("top_k_periods: k must be in [1, " + std::to_string(max_k) + "], got " +
                          std::to_string(k));
    // bins 1..floor(S/2); DC encodes the mean, not a period
    std::vector<std::size_t> bins(max_k);
    for (std::size_t i = 0; i < max_k; ++i) bins[i] = i + 1;
    std::stable_sort(bins.begin(), bins.end(), [&](std::size_t a, std::size_t b) {
        if (spec.magnitudes[a] != spec.magnitudes[b]) return spec.magnitudes[a] > spec.magnitudes[b];
        return a < b; // ties toward the lower frequency index
    });
    PeriodSet ps;
    ps.seq_len = S;
    ps.entries.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t f = bins[i];
        const std::size_t p = (S + f - 1) / f; // ceil(S/f)
        ps.entries.push_back(PeriodEntry{f, p, spec.magnitudes[f]});
    }
    return ps;
}

template <typename T>
Tensor<T> fold_to_2d(const Tensor<T>& x, std::size_t p, std::size_t f) {
    if (x.rank() != 3)
        throw ShapeError("fold_to_2d: expected [B,S,N], got " + shape_str(x.shape()));
    const std::size_t S = x.shape()[1];
    if (p < 1 || f < 1 || p * f < S)
        throw ShapeError("fold_to_2d: p*f = " + std::to_string(p * f) +
                         " cannot hold a series of length " + std::to_string(S));
    const std::size_t padded = p * f;
    Tensor<T> y = x;
    if (padded > S) y = pad_zero(y, {{0, 0}, {0, padded - S}, {0, 0}});
    // [B, f*p, N] -> [B, f, p, N]: time index j*p + r lands at (column j, row r)
    y = reshape(y, {x.shape()[0], f, p, x.shape()[2]});
    return permute(y, {0, 3, 2, 1}); // [B, N, p, f]
}

template <typename T>
Tensor<T> unfold_to_1d(const Tensor<T>& t, std::size_t seq_len) {
    if (t.rank() != 4)
        throw ShapeError("unfold_to_1d: expected [B,N,p,f], got " + shape_str(t.shape()));
    const std::size_t B = t.shape()[0], N = t.shape()[1], p = t.shape()[2], f = t.shape()[3];
    if (seq_len > p * f)
        throw ConfigError("unfold_to_1d: requested length " + std::to_string(seq_len) +
                          " exceeds p*f = " + std::to_string(p * f));
    Tensor<T> y = permute(t, {0, 3, 2, 1});       // [B, f, p, N]
    y = reshape(y, {B, p * f, N});                // [B, p*f, N]
    if (seq_len < p * f) y = slice(y, {0, 0, 0}, {B, seq_len, N});
    return y;
}

template Spectrum rfft_magnitude<float>(const Tensor<float>&);
template Spectrum rfft_magnitude<double>(const Tensor<double>&);
template Tensor<float> fold_to_2d<float>(const Tensor<float>&, std::size_t, std::size_t);
template Tensor<double> fold_to_2d<double>(const Tensor<double>&, std::size_t, std::size_t);
template Tensor<float> unfold_to_1d<float>(const Tensor<float>&, std::size_t);
template Tensor<double> unfold_to_1d<double>(const Tensor<double>&, std::size_t);

} // namespace times2d
