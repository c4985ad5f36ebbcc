#pragma once

#include "times2d/data.hpp"
#include "times2d/model_config.hpp"
#include "times2d/spectral.hpp"

#include <map>
#include <optional>
#include <string>

namespace times2d {

/// Everything needed to resume or evaluate a trained model: architecture
/// config, normalization statistics, frozen periods (if any), named
/// parameter tensors plus Adam moments, the optimizer step counter and the
/// rng seed state.
template <typename T>
struct Checkpoint {
    ModelConfig config;
    NormStats stats;
    std::vector<std::string> column_names;
    std::optional<PeriodSet> frozen_periods;
    std::map<std::string, Tensor<T>> tensors;
    std::uint64_t step = 0;
    std::uint64_t rng_state = 0;
};

/// Binary layout: magic "T2D1", u32 version, u32-length-prefixed config
/// text, u64 step, u64 rng state, u32 tensor count, then per tensor a
/// u32-length-prefixed name, u8 dtype code (1 = f32, 2 = f64), u32 rank,
/// u64 extents and the little-endian payload.
template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::string& path);

/// Validates magic, version and every shape; truncation or garbage raises
/// CheckpointError naming the byte offset. Tensors stored at the other
/// precision are converted elementwise to T on load.
template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path);

/// Reads only the header and returns the stored training precision (32/64).
int checkpoint_precision(const std::string& path);

} // namespace times2d
