#pragma once

#include "times2d/model_config.hpp"
#include "times2d/params.hpp"
#include "times2d/spectral.hpp"

namespace times2d {

/// Fixed sinusoidal positional table for `tokens` positions:
/// pe[j,2m] = sin(j / 10000^(2m/d_model)), pe[j,2m+1] = cos(same argument).
template <typename T>
Tensor<T> positional_encoding(std::size_t tokens, std::size_t d_model);

template <typename T>
struct BranchOutput {
    Tensor<T> prediction; // [B,P,N]
    double amplitude = 0.0;
};

/// Runtime knobs for a forward pass: dropout is active only while training
/// and draws from the supplied deterministic stream.
struct ForwardMode {
    bool training = false;
    Rng* dropout_rng = nullptr;
};

/// Periodic decomposition branch processor. One folded 2D tensor per
/// dominant period runs through conv -> per-column token embedding ->
/// positional encoding -> depth x (self-attention -> FFN, residual + norm)
/// -> flatten -> linear head to the prediction length. The conv, attention,
/// FFN and norm parameters are shared across branches; the column embedding
/// is keyed by the branch's (period, frequency) grid and the output head by
/// its frequency count, both created lazily with seeded initialization.
template <typename T>
class PdbBlock {
public:
    PdbBlock(const ModelConfig& cfg, ParamStore<T>& params);

    /// Multi-head self-attention over the f column tokens (no causal mask;
    /// tokens are whole periods, not future values).
    Tensor<T> mhsa(const Tensor<T>& tokens, std::size_t depth_index, const ForwardMode& mode);

    /// Per-token linear -> GELU -> linear.
    Tensor<T> ffn(const Tensor<T>& tokens, std::size_t depth_index, const ForwardMode& mode);

    /// Full branch: x[B,S,N] with one (freq, period, amplitude) entry
    /// to prediction [B,P,N].
    BranchOutput<T> branch_forward(const Tensor<T>& x, const PeriodEntry& entry,
                                   const ForwardMode& mode);

    /// Softmax-weighted combination of branch predictions by amplitude.
    static Tensor<T> branch_merge(const std::vector<BranchOutput<T>>& branches);

private:
    Tensor<T> encoder(const Tensor<T>& tokens, const ForwardMode& mode);
    Tensor<T> dropout(const Tensor<T>& t, const ForwardMode& mode);

    const ModelConfig& cfg_;
    ParamStore<T>& params_;
};

} // namespace times2d
