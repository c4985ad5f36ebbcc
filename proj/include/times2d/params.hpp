#pragma once

#include "times2d/rng.hpp"
#include "times2d/tensor.hpp"

#include <cmath>
#include <map>
#include <string>

namespace times2d {

/// Named trainable tensors. Iteration order (std::map) is deterministic, and
/// lazily created entries are initialized from a stream keyed by
/// (base seed, name) so creation order never matters.
template <typename T>
class ParamStore {
public:
    explicit ParamStore(std::uint64_t base_seed = 0) : base_seed_(base_seed) {}

    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    /// Fan-in-scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Tensor<T>& get_or_create_uniform(const std::string& name, Shape shape, std::size_t fan_in) {
        auto it = params_.find(name);
        if (it != params_.end()) return it->second;
        Rng rng(seed_for(base_seed_, name));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<T> values(shape_numel(shape));
        for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
        auto t = Tensor<T>::from_data(std::move(shape), std::move(values), /*requires_grad*/ true);
        return params_.emplace(name, std::move(t)).first->second;
    }

    Tensor<T>& get_or_create_constant(const std::string& name, Shape shape, T value) {
        auto it = params_.find(name);
        if (it != params_.end()) return it->second;
        auto t = Tensor<T>::full(std::move(shape), value);
        t.set_requires_grad(true);
        return params_.emplace(name, std::move(t)).first->second;
    }

    Tensor<T>& at(const std::string& name) { return params_.at(name); }
    const Tensor<T>& at(const std::string& name) const { return params_.at(name); }

    /// Replaces (or creates) an entry with the given values; used by
    /// checkpoint loading.
    void put(const std::string& name, Tensor<T> tensor) {
        tensor.set_requires_grad(true);
        params_.insert_or_assign(name, std::move(tensor));
    }

    std::map<std::string, Tensor<T>>& entries() { return params_; }
    const std::map<std::string, Tensor<T>>& entries() const { return params_; }
    std::size_t size() const { return params_.size(); }

    void zero_grad() {
        for (auto& [name, t] : params_) t.zero_grad();
    }

    std::uint64_t base_seed() const { return base_seed_; }

private:
    std::uint64_t base_seed_;
    std::map<std::string, Tensor<T>> params_;
};

} // namespace times2d
