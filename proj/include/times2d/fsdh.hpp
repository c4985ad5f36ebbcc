#pragma once

#include "times2d/model_config.hpp"
#include "times2d/params.hpp"

#include <string>

namespace times2d {

/// out[0] = 0, out[t] = x[t] - x[t-1] for t >= 1: the difference series
/// shifted into positions 1..S-1 with a front zero pad preserving length.
template <typename T> Tensor<T> first_difference(const Tensor<T>& x);

/// Same contract applied to the (padded) first difference; equals
/// first_difference(first_difference(x)) exactly.
template <typename T> Tensor<T> second_difference(const Tensor<T>& d1);

/// Stacks D1 (index 0) and D2 (index 1) along a new derivative axis:
/// [B,S,N] x2 -> [B,N,2,S].
template <typename T> Tensor<T> build_heatmap(const Tensor<T>& d1, const Tensor<T>& d2);

/// Derivative-heatmap branch: difference heatmap -> per-variable conv stack
/// over the 2xS grid -> learned contraction over the (derivative x channel)
/// axes -> shared linear head S -> P. x[B,S,N] -> [B,P,N].
template <typename T>
class FsdhBlock {
public:
    FsdhBlock(const ModelConfig& cfg, ParamStore<T>& params);
    Tensor<T> forward(const Tensor<T>& x);

private:
    const ModelConfig& cfg_;
    ParamStore<T>& params_;
};

/// Writes a heatmap tensor [B,N,2,S] to disk. CSV: one block per (batch,
/// variable) with a comment header line, two rows (D1 then D2), values
/// printed exactly (round-trippable). PGM: per-(batch, variable) P2 images
/// of |value| min-max scaled to 0..255, named <stem>_b<k>_v<j>.pgm.
enum class HeatmapFormat { Csv, Pgm };
template <typename T>
void export_heatmap(const Tensor<T>& heatmap, const std::string& path, HeatmapFormat format);

/// Parses a CSV produced by export_heatmap back into [B,N,2,S] values.
Tensor<double> parse_heatmap_csv(const std::string& path);

} // namespace times2d
