#pragma once

// Reverse-mode autodiff tensor. A tensor is a shared handle to a graph node;
// copying a tensor aliases the same storage.

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdrt/parallel.hpp"

namespace hdrt::nn {

class NnError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until a gradient is accumulated
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;

    std::vector<T>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), T(0));
        return grad;
    }
};

/// Whether newly created op results record a graph (thread-local).
bool grad_enabled();

/// Disables graph recording for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

/// Kernel execution policy for all ops (default serial, bit-reproducible).
Exec op_exec();
void set_op_exec(Exec e);

template <typename T>
class BasicTensor {
public:
    using NodePtr = std::shared_ptr<Node<T>>;

    BasicTensor() = default;
    explicit BasicTensor(NodePtr n) : n_(std::move(n)) {}

    static BasicTensor zeros(const Shape& shape, bool requires_grad = false) {
        return from(shape, std::vector<T>(numel(shape), T(0)), requires_grad);
    }
    static BasicTensor full(const Shape& shape, T v, bool requires_grad = false) {
        return from(shape, std::vector<T>(numel(shape), v), requires_grad);
    }
    static BasicTensor from(const Shape& shape, std::vector<T> data, bool requires_grad = false) {
        if (data.size() != numel(shape))
            throw NnError("tensor: data length " + std::to_string(data.size()) + " does not match shape " +
                          shape_str(shape));
        auto n = std::make_shared<Node<T>>();
        n->shape = shape;
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        return BasicTensor(std::move(n));
    }
    static BasicTensor scalar(T v, bool requires_grad = false) { return from({1}, {v}, requires_grad); }

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return node().shape; }
    int dim(std::size_t i) const { return node().shape.at(i); }
    std::size_t rank() const { return node().shape.size(); }
    std::size_t size() const { return node().value.size(); }

    std::span<T> data() { return node().value; }
    std::span<const T> data() const { return node().value; }
    std::vector<T>& storage() { return node().value; }
    /// Empty span when no gradient has been accumulated.
    std::span<const T> grad() const { return node().grad; }
    std::span<T> grad() { return node().grad; }
    bool has_grad() const { return !node().grad.empty(); }
    void zero_grad() { node().grad.clear(); }

    bool requires_grad() const { return node().requires_grad; }
    void set_requires_grad(bool r) { node().requires_grad = r; }

    T item() const {
        if (size() != 1) throw NnError("item: tensor is not a scalar");
        return node().value[0];
    }

    /// Copy of the values without graph history.
    BasicTensor detach() const { return from(shape(), node().value, false); }

    /// Reverse sweep from this scalar; accumulates into every tracked leaf and
    /// then releases the graph.
    void backward();

    Node<T>& node() {
        if (!n_) throw NnError("tensor: undefined");
        return *n_;
    }
    const Node<T>& node() const {
        if (!n_) throw NnError("tensor: undefined");
        return *n_;
    }
    const NodePtr& ptr() const { return n_; }

private:
    NodePtr n_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Creates an op result node. Inputs are kept (and the backward rule stored)
/// only when grad mode is on and some input is tracked.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> value, std::vector<BasicTensor<T>> inputs,
                           std::function<void(Node<T>&)> backward_fn) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool track = false;
    if (grad_enabled())
        for (const auto& in : inputs) track = track || in.requires_grad();
    if (track) {
        n->requires_grad = true;
        for (auto& in : inputs) n->inputs.push_back(in.ptr());
        n->backward_fn = std::move(backward_fn);
    }
    return BasicTensor<T>(std::move(n));
}

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace hdrt::nn
