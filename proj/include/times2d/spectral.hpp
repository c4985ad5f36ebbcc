#pragma once

#include "times2d/ops.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace times2d {

/// Non-negative-frequency magnitude spectrum of a length-S window, averaged
/// over the batch and variable dimensions. magnitudes.size() == floor(S/2)+1.
struct Spectrum {
    std::vector<double> magnitudes;
    std::size_t seq_len = 0;
};

struct PeriodEntry {
    std::size_t freq;    // frequency bin index, >= 1 (DC excluded)
    std::size_t period;  // ceil(seq_len / freq)
    double amplitude;    // averaged magnitude at the bin
};

/// The k dominant (frequency, period, amplitude) triples, sorted by
/// descending amplitude with ties broken toward the lower frequency index.
struct PeriodSet {
    std::vector<PeriodEntry> entries;
    std::size_t seq_len = 0;
    std::size_t size() const { return entries.size(); }
};

/// In-place DFT of an arbitrary-length complex sequence. Radix-2 iterative
/// butterflies for power-of-two lengths, Bluestein's chirp-z otherwise.
void fft(std::vector<std::complex<double>>& v, bool inverse);

/// Magnitudes |X_f| of the non-negative frequency bins of a real series.
std::vector<double> real_spectrum_magnitudes(const std::vector<double>& series);

/// Per-(batch, variable) DFT magnitudes of x[B,S,N], kept for the
/// floor(S/2)+1 non-negative bins and then averaged over B and N.
template <typename T> Spectrum rfft_magnitude(const Tensor<T>& x);

/// The k largest-magnitude bins excluding DC. 1 <= k <= floor(S/2).
PeriodSet top_k_periods(const Spectrum& spec, std::size_t k);

/// Reshapes x[B,S,N] into [B,N,p,f]: the series is zero-padded at the end to
/// length p*f and column j holds time steps [j*p, (j+1)*p). Differentiable.
template <typename T> Tensor<T> fold_to_2d(const Tensor<T>& x, std::size_t p, std::size_t f);

/// Inverse of fold_to_2d; drops the padded tail to recover [B,S,N].
template <typename T> Tensor<T> unfold_to_1d(const Tensor<T>& t, std::size_t seq_len);

} // namespace times2d
