#pragma once

#include "times2d/errors.hpp"

#include <cstddef>
#include <cstdint>
#include <string>

namespace times2d {

enum class LossKind { Mse, Mae, Smape };

LossKind loss_kind_from_string(const std::string& s);
const char* loss_kind_name(LossKind k);

/// Architecture hyperparameters. Defaults follow the sweet spots of the
/// hyperparameter sensitivity sweep (small embedding, moderate FFN width).
struct ModelConfig {
    std::size_t seq_len = 96;      // S
    std::size_t pred_len = 96;     // P
    std::size_t n_vars = 1;        // N
    std::size_t top_k = 3;         // dominant periods per window
    std::size_t d_model = 32;
    std::size_t d_ff = 128;
    std::size_t heads = 4;
    std::size_t conv_channels = 16;    // C_mid: channels after the branch conv
    std::size_t heatmap_channels = 8;  // C_h: channels in the derivative conv stack
    std::size_t depth = 1;             // attention+FFN sub-blocks per branch
    double dropout = 0.1;
    int precision = 32; // 32 or 64; training storage width
    std::uint64_t seed = 42;
    bool frozen_periods = false;

    void validate() const {
        if (seq_len < 4) throw ConfigError("config: seq_len must be >= 4");
        if (pred_len < 1) throw ConfigError("config: pred_len must be >= 1");
        if (n_vars < 1) throw ConfigError("config: n_vars must be >= 1");
        if (top_k < 1 || top_k > seq_len / 2)
            throw ConfigError("config: top_k must be in [1, seq_len/2]");
        if (d_model == 0 || heads == 0 || d_model % heads != 0)
            throw ConfigError("config: d_model must be a positive multiple of heads");
        if (d_ff == 0 || conv_channels == 0 || heatmap_channels == 0 || depth == 0)
            throw ConfigError("config: layer sizes must be positive");
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("config: dropout must be in [0,1)");
        if (precision != 32 && precision != 64)
            throw ConfigError("config: precision must be 32 or 64");
    }
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch = 32;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    std::size_t patience = 10; // early-stop patience on validation loss
    LossKind loss = LossKind::Mse;
    double clip_norm = 5.0; // global gradient-norm clip; <= 0 disables

    void validate() const {
        if (batch < 1) throw ConfigError("train config: batch must be >= 1");
        if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ConfigError("train config: betas must be in [0,1)");
        if (!(adam_eps > 0.0)) throw ConfigError("train config: adam_eps must be positive");
        if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be >= 0");
    }
};

} // namespace times2d
