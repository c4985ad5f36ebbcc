#pragma once

#include "times2d/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace times2d {

/// Rectangular multivariate series as loaded from disk: `rows` time steps of
/// `cols` variables. An optional leading timestamp column is detected and
/// kept as raw strings (not modeled).
struct RawSeries {
    std::vector<std::string> column_names;
    std::vector<std::string> timestamps;
    std::vector<double> values; // row-major rows x cols
    std::size_t rows = 0;
    std::size_t cols = 0;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct LoadOptions {
    bool fill_forward = false; // forward-fill blank cells instead of erroring
};

/// Per-variable normalization statistics, computed on the training split only.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev; // floored at 1e-8 for constant columns
};

/// One chronological split, already normalized.
struct SplitSeries {
    std::vector<double> values; // row-major rows x cols
    std::size_t rows = 0;
    std::size_t cols = 0;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Splits {
    SplitSeries train, val, test;
    NormStats stats;
    std::vector<std::string> column_names;
};

/// Sliding (input, target) window indices over one split: window i covers
/// input rows [start, start+S) and target rows [start+S, start+S+P).
struct WindowSet {
    std::size_t input_len = 0;  // S
    std::size_t target_len = 0; // P
    std::size_t stride = 1;
    std::vector<std::size_t> starts;

    std::size_t size() const { return starts.size(); }
};

/// CSV ingestion: comma-separated, optional header, '.' decimal, UTF-8.
/// Ragged rows, non-numeric cells and blank cells (without fill_forward)
/// produce a DataError naming the line.
RawSeries load_csv(const std::string& path, const LoadOptions& options = {});

/// Chronological train/val/test split with z-score normalization per
/// variable using train-split statistics. When `given` is provided those
/// statistics are applied instead of being recomputed.
Splits split_normalize(const RawSeries& raw, const std::vector<double>& ratios,
                       const std::optional<NormStats>& given = std::nullopt);

double denormalize_value(const NormStats& stats, std::size_t var, double v);
double normalize_value(const NormStats& stats, std::size_t var, double v);

/// Windows at offsets 0, stride, 2*stride, ... while in bounds.
WindowSet make_windows(std::size_t series_rows, std::size_t input_len, std::size_t target_len,
                       std::size_t stride);

/// Deterministic batch schedule: a permutation (or identity) of window
/// indices cut into batches of size B, the final short batch emitted as-is.
std::vector<std::vector<std::size_t>> batch_schedule(std::size_t window_count, std::size_t batch,
                                                     bool shuffle, std::uint64_t seed);

/// Materializes the selected windows as ([B,S,N], [B,P,N]) tensors.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> gather_batch(const SplitSeries& series, const WindowSet& windows,
                                             const std::vector<std::size_t>& which);

} // namespace times2d
