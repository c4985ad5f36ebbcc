#pragma once

#include "times2d/data.hpp"
#include "times2d/fsdh.hpp"
#include "times2d/pdb.hpp"

#include <optional>

namespace times2d {

/// Full model: spectral period detection feeding k periodic-decomposition
/// branches (amplitude-softmax merged), plus the derivative-heatmap branch,
/// combined by elementwise summation.
template <typename T>
class Times2dModel {
public:
    explicit Times2dModel(const ModelConfig& cfg)
        : cfg_((cfg.validate(), cfg)), params_(cfg.seed), pdb_(cfg_, params_), fsdh_(cfg_, params_) {}

    Times2dModel(const Times2dModel&) = delete;
    Times2dModel& operator=(const Times2dModel&) = delete;

    /// Dominant periods for this input: the frozen set when one is
    /// installed, otherwise recomputed from the window's spectrum.
    PeriodSet periods_for(const Tensor<T>& x) const {
        if (frozen_periods_) return *frozen_periods_;
        return top_k_periods(rfft_magnitude(x), cfg_.top_k);
    }

    Tensor<T> forward(const Tensor<T>& x, const ForwardMode& mode = {}) {
        if (x.rank() != 3 || x.shape()[1] != cfg_.seq_len || x.shape()[2] != cfg_.n_vars)
            throw ShapeError("model: expected [B," + std::to_string(cfg_.seq_len) + "," +
                             std::to_string(cfg_.n_vars) + "], got " + shape_str(x.shape()));
        const PeriodSet periods = periods_for(x);
        std::vector<BranchOutput<T>> branches;
        branches.reserve(periods.size());
        for (const auto& entry : periods.entries)
            branches.push_back(pdb_.branch_forward(x, entry, mode));
        auto pdb_out = PdbBlock<T>::branch_merge(branches);
        auto fsdh_out = fsdh_.forward(x);
        return add(pdb_out, fsdh_out);
    }

    void freeze_periods(PeriodSet ps) { frozen_periods_ = std::move(ps); }
    void clear_frozen_periods() { frozen_periods_.reset(); }
    const std::optional<PeriodSet>& frozen_periods() const { return frozen_periods_; }

    const ModelConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }
    PdbBlock<T>& pdb() { return pdb_; }
    FsdhBlock<T>& fsdh() { return fsdh_; }

private:
    ModelConfig cfg_;
    ParamStore<T> params_;
    PdbBlock<T> pdb_;
    FsdhBlock<T> fsdh_;
    std::optional<PeriodSet> frozen_periods_;
};

/// Estimates a frozen PeriodSet from training data: magnitude spectra are
/// averaged over every training window before the top-k selection.
template <typename T>
PeriodSet estimate_frozen_periods(const SplitSeries& series, const WindowSet& windows,
                                  std::size_t top_k);

} // namespace times2d
