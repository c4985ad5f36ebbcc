#pragma once

#include "times2d/model_config.hpp"

#include <string>
#include <vector>

namespace times2d {

/// Merged run settings: architecture + training hyperparameters + data
/// paths and evaluation options. Sourced from a flat `key = value` config
/// file (# comments) with command-line flags overriding file values.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;

    std::string data_path;
    std::string out_dir = "out";
    std::string checkpoint_path; // evaluate/forecast input
    std::vector<double> split_ratios = {0.7, 0.1, 0.2};
    std::size_t stride = 1;      // training window stride
    std::size_t eval_stride = 1; // evaluation window stride
    bool fill_forward = false;
    bool mase_insample = false;
    std::size_t season = 1; // seasonal period for MASE / the naive baseline
    bool timing = false;    // real wall-clock seconds in history.csv
    std::size_t horizon = 0; // forecast rows; 0 means the model's pred_len

    void validate() const {
        model.validate();
        train.validate();
        if (season < 1) throw ConfigError("config: season must be >= 1");
        if (stride < 1 || eval_stride < 1) throw ConfigError("config: strides must be >= 1");
    }
};

/// Parses a config file and applies it onto `cfg`. Unknown keys are errors.
void apply_config_file(RunConfig& cfg, const std::string& path);

/// Applies one `key=value` assignment (also used for file lines).
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

/// Emits the full effective configuration; parseable by apply_config_file.
std::string config_snapshot(const RunConfig& cfg);

} // namespace times2d
