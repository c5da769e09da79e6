#include "hdrt/nn/layers.hpp"

#include <cmath>

namespace hdrt::nn {

std::vector<NamedTensor> Module::parameters(const std::string& prefix) const {
    std::vector<NamedTensor> out;
    for (const auto& p : params_) out.push_back({prefix + p.name, p.tensor});
    for (const auto& [name, child] : children_) {
        auto sub = child->parameters(prefix + name + ".");
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

std::vector<NamedTensor> Module::buffers(const std::string& prefix) const {
    std::vector<NamedTensor> out;
    for (const auto& b : buffers_) out.push_back({prefix + b.name, b.tensor});
    for (const auto& [name, child] : children_) {
        auto sub = child->buffers(prefix + name + ".");
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

std::vector<Tensor> Module::trainable() const {
    std::vector<Tensor> out;
    for (auto& p : parameters())
        if (p.tensor.requires_grad()) out.push_back(p.tensor);
    return out;
}

std::size_t Module::parameter_count() const {
    std::size_t n = 0;
    for (auto& p : parameters()) n += p.tensor.size();
    return n;
}

void Module::freeze() {
    for (auto& p : parameters()) {
        p.tensor.set_requires_grad(false);
        p.tensor.zero_grad();
    }
}

void Module::unfreeze() {
    for (auto& p : parameters()) p.tensor.set_requires_grad(true);
}

bool Module::any_trainable() const { return !trainable().empty(); }

void Module::train(bool on) {
    training_ = on;
    for (auto& [name, child] : children_) child->train(on);
}

void Module::zero_grad() {
    for (auto& p : parameters()) p.tensor.zero_grad();
}

void Module::register_parameter(std::string name, Tensor t) { params_.push_back({std::move(name), std::move(t)}); }
void Module::register_buffer(std::string name, Tensor t) { buffers_.push_back({std::move(name), std::move(t)}); }
void Module::register_module(std::string name, Module& m) { children_.emplace_back(std::move(name), &m); }

Tensor kaiming_uniform(const Shape& shape, int fan_in, Rng& rng) {
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<float> v(numel(shape));
    for (float& x : v) x = static_cast<float>(dist(rng));
    return Tensor::from(shape, std::move(v), true);
}

Conv2d::Conv2d(int in_c, int out_c, int k, int stride_, int pad_, bool with_bias, Rng& rng)
    : weight(kaiming_uniform({out_c, in_c, k, k}, in_c * k * k, rng)), stride(stride_), pad(pad_) {
    register_parameter("weight", weight);
    if (with_bias) {
        bias = Tensor::zeros({out_c}, true);
        register_parameter("bias", bias);
    }
}

Tensor Conv2d::forward(const Tensor& x) const { return conv2d(x, weight, bias, stride, pad); }

ConvTranspose2d::ConvTranspose2d(int in_c, int out_c, int k, int stride_, Rng& rng)
    : weight(kaiming_uniform({in_c, out_c, k, k}, in_c * k * k, rng)), bias(Tensor::zeros({out_c}, true)),
      stride(stride_) {
    register_parameter("weight", weight);
    register_parameter("bias", bias);
}

Tensor ConvTranspose2d::forward(const Tensor& x) const { return conv_transpose2d(x, weight, bias, stride, 0); }

BatchNorm2d::BatchNorm2d(int c)
    : gamma(Tensor::full({c}, 1.0f, true)), beta(Tensor::zeros({c}, true)), running_mean(Tensor::zeros({c})),
      running_var(Tensor::full({c}, 1.0f)) {
    register_parameter("gamma", gamma);
    register_parameter("beta", beta);
    register_buffer("running_mean", running_mean);
    register_buffer("running_var", running_var);
}

Tensor BatchNorm2d::forward(const Tensor& x) {
    return batchnorm(x, gamma, beta, &running_mean.storage(), &running_var.storage(), training_);
}

DoubleConv::DoubleConv(int in_c, int out_c, Rng& rng)
    : c1(in_c, out_c, 3, 1, 1, false, rng), b1(out_c), c2(out_c, out_c, 3, 1, 1, false, rng), b2(out_c) {
    register_module("conv1", c1);
    register_module("bn1", b1);
    register_module("conv2", c2);
    register_module("bn2", b2);
}

Tensor DoubleConv::forward(const Tensor& x) {
    return relu(b2.forward(c2.forward(relu(b1.forward(c1.forward(x))))));
}

Down::Down(int in_c, int out_c, Rng& rng) : conv(in_c, out_c, rng) { register_module("conv", conv); }

Tensor Down::forward(const Tensor& x) { return conv.forward(maxpool2x2(x)); }

Up::Up(int in_c, int skip_c, int out_c, Rng& rng) : up(in_c, in_c / 2, 2, 2, rng), conv(in_c / 2 + skip_c, out_c, rng) {
    register_module("up", up);
    register_module("conv", conv);
}

Tensor Up::forward(const Tensor& x, const Tensor& skip) {
    return conv.forward(concat_channels<float>({skip, up.forward(x)}));
}

}  // namespace hdrt::nn
