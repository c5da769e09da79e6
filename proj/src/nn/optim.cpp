#include "hdrt/nn/optim.hpp"

#include <cmath>

namespace hdrt::nn {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg_.lr > 0.0)) throw NnError("adam: learning rate must be > 0");
    for (auto& p : params_) {
        m_.emplace_back(p.size(), 0.0f);
        v_.emplace_back(p.size(), 0.0f);
    }
}

double Adam::lr() const {
    if (cfg_.halve_every <= 0) return cfg_.lr;
    return cfg_.lr * std::ldexp(1.0, -static_cast<int>(t_ / cfg_.halve_every));
}

void Adam::step() {
    const double lr = this->lr();
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = params_[k];
        if (!p.requires_grad()) continue;
        if (!p.has_grad()) throw NnError("adam: parameter " + std::to_string(k) + " has no gradient");
        auto g = p.grad();
        auto x = p.data();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = static_cast<float>(cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i]);
            v[i] = static_cast<float>(cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * static_cast<double>(g[i]) * g[i]);
            const double mh = m[i] / bc1, vh = v[i] / bc2;
            x[i] = static_cast<float>(x[i] - lr * mh / (std::sqrt(vh) + cfg_.eps));
        }
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace hdrt::nn
