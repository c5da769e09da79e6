#include "hdrt/nn/tensor.hpp"

#include <unordered_set>

namespace hdrt::nn {

namespace {
thread_local bool g_grad_enabled = true;
Exec g_exec = Exec::serial;
}  // namespace

std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) {
        if (d < 0) throw NnError("shape: negative dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
    return out + ")";
}

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Exec op_exec() { return g_exec; }
void set_op_exec(Exec e) { g_exec = e; }

template <typename T>
void BasicTensor<T>::backward() {
    if (size() != 1) throw NnError("backward: loss must be a scalar, got shape " + shape_str(shape()));
    if (!requires_grad()) throw NnError("backward: tensor is not tracked");

    // Iterative post-order DFS gives a topological order.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{n_.get(), 0}};
    seen.insert(n_.get());
    while (!stack.empty()) {
        auto& [nd, next] = stack.back();
        if (next < nd->inputs.size()) {
            Node<T>* child = nd->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(nd);
            stack.pop_back();
        }
    }

    node().grad_buffer()[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* nd = *it;
        if (nd->backward_fn && !nd->grad.empty()) nd->backward_fn(*nd);
    }
    // Release the graph: interior nodes drop their inputs and rules.
    for (Node<T>* nd : order) {
        if (nd->backward_fn) {
            nd->backward_fn = nullptr;
            nd->inputs.clear();
        }
    }
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace hdrt::nn
