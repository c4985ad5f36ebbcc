#pragma once

#include "times2d/checkpoint.hpp"
#include "times2d/model.hpp"

namespace times2d {

/// Differentiable training losses. SMAPE uses a denominator floor of 1e-8
/// so flat-zero series stay finite.
template <typename T>
Tensor<T> compute_loss(const Tensor<T>& pred, const Tensor<T>& target, LossKind kind);

/// Adam first/second moments plus the shared step counter. Entries appear
/// lazily as parameters receive their first update.
template <typename T>
struct AdamState {
    std::map<std::string, std::vector<T>> m;
    std::map<std::string, std::vector<T>> v;
    std::uint64_t step = 0;
};

/// One bias-corrected Adam update over every parameter in the store.
/// Global gradient-norm clipping (when clip_norm > 0) rescales all gradients
/// before the moment updates; missing gradients count as zero.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, const TrainConfig& hyper);

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0; // NaN when no validation split is given
    double seconds = 0.0;
};

template <typename T>
struct TrainResult {
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    AdamState<T> opt_state;
};

/// Per-epoch progress callback; return false to keep going quietly.
using EpochLogger = std::function<void(const EpochStats&)>;

/// Deterministic epoch loop: seeded shuffle, forward/backward/adam per
/// batch, unshuffled validation each epoch, early stop on patience, best-
/// validation parameters restored into the model on return. Non-finite loss
/// aborts with a DivergenceError naming the step.
template <typename T>
TrainResult<T> train(Times2dModel<T>& model, const TrainConfig& tc, const SplitSeries& train_split,
                     const WindowSet& train_windows, const SplitSeries* val_split,
                     const WindowSet* val_windows, const EpochLogger& log = {});

/// Forward-only mean loss over a window set (used for validation/final eval).
template <typename T>
double evaluate_loss(Times2dModel<T>& model, const SplitSeries& split, const WindowSet& windows,
                     std::size_t batch, LossKind kind);

} // namespace times2d
