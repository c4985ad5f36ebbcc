#include "times2d/train.hpp"

#include "times2d/kernels.hpp"
#include "times2d/ops.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace times2d {

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "mse") return LossKind::Mse;
    if (s == "mae") return LossKind::Mae;
    if (s == "smape") return LossKind::Smape;
    throw ConfigError("loss: expected one of {mse,mae,smape}, got '" + s + "'");
}

const char* loss_kind_name(LossKind k) {
    switch (k) {
        case LossKind::Mse: return "mse";
        case LossKind::Mae: return "mae";
        default: return "smape";
    }
}

template <typename T>
Tensor<T> compute_loss(const Tensor<T>& pred, const Tensor<T>& target, LossKind kind) {
    if (pred.shape() != target.shape())
        throw ShapeError("loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                         shape_str(target.shape()));
    auto diff = sub(pred, target);
    switch (kind) {
        case LossKind::Mse: return mean(mul(diff, diff));
        case LossKind::Mae: return mean(abs(diff));
        case LossKind::Smape: {
            auto denom = clamp_min(add(abs(pred), abs(target)), static_cast<T>(1e-8));
            return mul(mean(div(abs(diff), denom)), static_cast<T>(200));
        }
    }
    throw ConfigError("loss: unknown kind");
}

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state, const TrainConfig& hyper) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(hyper.beta1, t);
    const double bc2 = 1.0 - std::pow(hyper.beta2, t);

    // Global gradient norm over every parameter (missing grads are zero).
    double scale = 1.0;
    if (hyper.clip_norm > 0.0) {
        double sq = 0.0;
        for (auto& [name, p] : params.entries()) {
            if (!p.has_grad()) continue;
            const auto& g = p.grad();
            sq += static_cast<double>(kernels::dot(g.data(), g.data(), g.size()));
        }
        const double norm = std::sqrt(sq);
        if (norm > hyper.clip_norm) scale = hyper.clip_norm / norm;
    }

    for (auto& [name, p] : params.entries()) {
        auto& m = state.m[name];
        auto& v = state.v[name];
        if (m.empty()) m.assign(p.size(), T(0));
        if (v.empty()) v.assign(p.size(), T(0));
        const bool has_g = p.has_grad();
        const T* g = has_g ? p.grad().data() : nullptr;
        T* w = p.data();
        const T b1 = static_cast<T>(hyper.beta1), b2 = static_cast<T>(hyper.beta2);
        for (std::size_t i = 0; i < p.size(); ++i) {
            T gi = has_g ? static_cast<T>(g[i] * scale) : T(0);
            if (hyper.weight_decay > 0.0) gi += static_cast<T>(hyper.weight_decay) * w[i];
            m[i] = b1 * m[i] + (T(1) - b1) * gi;
            v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
            const double mhat = static_cast<double>(m[i]) / bc1;
            const double vhat = static_cast<double>(v[i]) / bc2;
            w[i] -= static_cast<T>(hyper.lr * mhat / (std::sqrt(vhat) + hyper.adam_eps));
        }
    }
}

template <typename T>
double evaluate_loss(Times2dModel<T>& model, const SplitSeries& split, const WindowSet& windows,
                     std::size_t batch, LossKind kind) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& idx : batch_schedule(windows.size(), batch, /*shuffle*/ false, 0)) {
        auto [x, y] = gather_batch<T>(split, windows, idx);
        auto loss = compute_loss(model.forward(x), y, kind);
        total += static_cast<double>(loss.item()) * static_cast<double>(idx.size());
        count += idx.size();
    }
    return count ? total / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

template <typename T>
TrainResult<T> train(Times2dModel<T>& model, const TrainConfig& tc, const SplitSeries& train_split,
                     const WindowSet& train_windows, const SplitSeries* val_split,
                     const WindowSet* val_windows, const EpochLogger& log) {
    tc.validate();
    if (train_windows.size() == 0) throw ConfigError("train: no training windows");
    const bool has_val = val_split != nullptr && val_windows != nullptr && val_windows->size() > 0;
    const std::uint64_t seed = model.config().seed;

    TrainResult<T> result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::map<std::string, std::vector<T>> best_params;
    std::size_t since_best = 0;
    std::uint64_t global_step = 0;

    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng dropout_rng(seed_for(seed, "dropout." + std::to_string(epoch)));
        ForwardMode mode{/*training*/ true, &dropout_rng};

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        const auto schedule = batch_schedule(train_windows.size(), tc.batch, /*shuffle*/ true,
                                             seed_for(seed, "epoch." + std::to_string(epoch)));
        for (const auto& idx : schedule) {
            auto [x, y] = gather_batch<T>(train_split, train_windows, idx);
            model.params().zero_grad();
            GradientTape<T> tape;
            Tensor<T> loss;
            {
                typename GradientTape<T>::Scope scope(tape);
                loss = compute_loss(model.forward(x, mode), y, tc.loss);
            }
            const double loss_value = static_cast<double>(loss.item());
            if (!std::isfinite(loss_value))
                throw DivergenceError("train: non-finite loss at step " +
                                      std::to_string(global_step + 1) + " (epoch " +
                                      std::to_string(epoch) + ")");
            tape.backward(loss);
            adam_step(model.params(), result.opt_state, tc);
            epoch_loss += loss_value * static_cast<double>(idx.size());
            seen += idx.size();
            ++global_step;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = epoch_loss / static_cast<double>(seen);
        stats.val_loss = has_val
                             ? evaluate_loss(model, *val_split, *val_windows, tc.batch, tc.loss)
                             : std::numeric_limits<double>::quiet_NaN();
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(stats);
        if (log) log(stats);

        const double tracked = has_val ? stats.val_loss : stats.train_loss;
        if (tracked < result.best_val_loss) {
            result.best_val_loss = tracked;
            result.best_epoch = epoch;
            since_best = 0;
            best_params.clear();
            for (const auto& [name, p] : model.params().entries()) best_params[name] = p.values();
        } else if (has_val) {
            ++since_best;
            if (since_best > tc.patience) break; // early stop
        }
    }

    // Restore the best snapshot so the returned model matches the
    // best-validation checkpoint.
    for (auto& [name, values] : best_params) {
        if (model.params().contains(name)) model.params().at(name).values() = values;
    }
    return result;
}

#define TIMES2D_INSTANTIATE_TRAIN(T)                                                          \
    template Tensor<T> compute_loss<T>(const Tensor<T>&, const Tensor<T>&, LossKind);         \
    template void adam_step<T>(ParamStore<T>&, AdamState<T>&, const TrainConfig&);            \
    template double evaluate_loss<T>(Times2dModel<T>&, const SplitSeries&, const WindowSet&,  \
                                     std::size_t, LossKind);                                  \
    template TrainResult<T> train<T>(Times2dModel<T>&, const TrainConfig&, const SplitSeries&, \
                                     const WindowSet&, const SplitSeries*, const WindowSet*,  \
                                     const EpochLogger&);

TIMES2D_INSTANTIATE_TRAIN(float)
TIMES2D_INSTANTIATE_TRAIN(double)

#undef TIMES2D_INSTANTIATE_TRAIN

} // namespace times2d
