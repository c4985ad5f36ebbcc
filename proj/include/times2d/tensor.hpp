#pragma once

#include "times2d/errors.hpp"

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace times2d {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

/// Row-major strides for a contiguous layout.
inline std::vector<std::size_t> row_major_strides(const Shape& s) {
    std::vector<std::size_t> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
    return st;
}

namespace detail {

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // empty until first accumulation
    bool requires_grad = false;
};

} // namespace detail

/// Dense n-dimensional array participating in a reverse-mode differentiation
/// graph. A Tensor is a cheap handle (shared ownership of its node); forward
/// values are treated as immutable once an op has consumed them. Parameters
/// are leaves whose storage the optimizer updates in place between steps.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return Tensor(std::move(shape), {}, requires_grad, /*fill*/ true, T(0));
    }

    static Tensor full(Shape shape, T value) {
        return Tensor(std::move(shape), {}, false, true, value);
    }

    static Tensor scalar(T value) { return full({1}, value); }

    static Tensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false) {
        if (shape_numel(shape) != values.size())
            throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
        Tensor t;
        t.node_ = std::make_shared<detail::TensorNode<T>>();
        t.node_->shape = std::move(shape);
        t.node_->data = std::move(values);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->data.size(); }
    std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }

    // A Tensor is a handle with shared ownership; constness of the handle is
    // shallow, so accessors hand out mutable storage like any pointer would.
    T* data() const { return node_->data.data(); }
    std::vector<T>& values() const { return node_->data; }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    const Tensor& set_requires_grad(bool rg) const {
        node_->requires_grad = rg;
        return *this;
    }

    bool has_grad() const { return node_ && !node_->grad.empty(); }

    /// Gradient store; allocates zeros of matching shape on first touch.
    std::vector<T>& grad() const {
        if (node_->grad.empty()) node_->grad.assign(node_->data.size(), T(0));
        return node_->grad;
    }

    void zero_grad() const {
        if (node_) node_->grad.clear();
    }

    /// Scalar extraction; contract-checked.
    T item() const {
        if (size() != 1)
            throw ShapeError("tensor: item() called on non-scalar of shape " + shape_str(shape()));
        return node_->data[0];
    }

    /// Convenience indexed read (tests, exports). Row-major.
    T at(std::initializer_list<std::size_t> idx) const {
        const Shape& s = shape();
        if (idx.size() != s.size())
            throw ShapeError("tensor: at() rank mismatch for shape " + shape_str(s));
        std::size_t off = 0, axis = 0;
        auto strides = row_major_strides(s);
        for (std::size_t i : idx) off += i * strides[axis++];
        return node_->data[off];
    }

    /// Stable identity of the underlying node (used by the tape).
    const void* id() const { return node_.get(); }

    /// Deep copy (fresh storage, no gradient, same requires_grad flag).
    Tensor clone() const {
        Tensor t = from_data(shape(), node_->data, node_->requires_grad);
        return t;
    }

    std::shared_ptr<detail::TensorNode<T>> node() const { return node_; }

private:
    Tensor(Shape shape, std::vector<T> values, bool rg, bool fill, T fill_value) {
        node_ = std::make_shared<detail::TensorNode<T>>();
        node_->shape = std::move(shape);
        if (fill)
            node_->data.assign(shape_numel(node_->shape), fill_value);
        else
            node_->data = std::move(values);
        node_->requires_grad = rg;
    }

    std::shared_ptr<detail::TensorNode<T>> node_;
};

/// Ordered record of differentiable operations. Ops append entries in
/// execution order, so the tape is topologically sorted by construction;
/// backward() replays it exactly once, in reverse. A tape is confined to one
/// worker and consumed by a single backward pass.
template <typename T>
class GradientTape {
public:
    GradientTape() = default;
    GradientTape(const GradientTape&) = delete;
    GradientTape& operator=(const GradientTape&) = delete;

    /// RAII activation: ops record into the innermost active tape.
    class Scope {
    public:
        explicit Scope(GradientTape& tape) : prev_(current_) { current_ = &tape; }
        ~Scope() { current_ = prev_; }
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        GradientTape* prev_;
    };

    static GradientTape* current() { return current_; }

    void record(const char* op, const void* output_id, std::function<void()> backward_fn) {
        entries_.push_back(Entry{op, output_id, std::move(backward_fn)});
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t backward_visits() const { return visits_; }

    /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, visiting
    /// each recorded op exactly once. Leaves with requires_grad accumulate
    /// dLoss/dLeaf additively across fan-out.
    void backward(Tensor<T> loss) {
        if (consumed_) throw ShapeError("backward: tape already consumed");
        if (loss.size() != 1)
            throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
        if (!produced(loss.id()))
            throw ShapeError("backward: loss was not produced on this tape");
        consumed_ = true;
        loss.grad()[0] = T(1);
        for (std::size_t i = entries_.size(); i-- > 0;) {
            entries_[i].fn();
            ++visits_;
        }
    }

private:
    struct Entry {
        const char* op;
        const void* output_id;
        std::function<void()> fn;
    };

    bool produced(const void* id) const {
        for (const Entry& e : entries_)
            if (e.output_id == id) return true;
        return false;
    }

    std::vector<Entry> entries_;
    std::size_t visits_ = 0;
    bool consumed_ = false;

    static thread_local GradientTape* current_;
};

template <typename T>
thread_local GradientTape<T>* GradientTape<T>::current_ = nullptr;

/// Runtime toggle for post-op finiteness checks (the "debug mode" data
/// invariant). Enabled by the test suites; off by default for speed.
void set_debug_checks(bool enabled);
bool debug_checks_enabled();

} // namespace times2d
