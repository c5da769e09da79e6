#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hdrt/nn/ops.hpp"

namespace hdrt::nn {

using Rng = std::mt19937_64;

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

/// Parameter container. Modules register their parameters, non-trainable
/// buffers and children by name; children must outlive the registration, so
/// modules are neither copyable nor movable.
class Module {
public:
    Module() = default;
    virtual ~Module() = default;
    Module(const Module&) = delete;
    Module& operator=(const Module&) = delete;

    std::vector<NamedTensor> parameters(const std::string& prefix = "") const;
    std::vector<NamedTensor> buffers(const std::string& prefix = "") const;
    std::vector<Tensor> trainable() const;
    std::size_t parameter_count() const;

    /// Disables gradient tracking for every parameter below this module.
    void freeze();
    void unfreeze();
    bool any_trainable() const;

    /// Switches batchnorm layers between batch and running statistics.
    void train(bool on = true);
    bool is_training() const { return training_; }

    void zero_grad();

protected:
    void register_parameter(std::string name, Tensor t);
    void register_buffer(std::string name, Tensor t);
    void register_module(std::string name, Module& m);

    bool training_ = true;

private:
    std::vector<NamedTensor> params_;
    std::vector<NamedTensor> buffers_;
    std::vector<std::pair<std::string, Module*>> children_;
};

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)).
Tensor kaiming_uniform(const Shape& shape, int fan_in, Rng& rng);

class Conv2d : public Module {
public:
    Conv2d(int in_c, int out_c, int k, int stride, int pad, bool bias, Rng& rng);
    Tensor forward(const Tensor& x) const;
    int in_channels() const { return weight.dim(1); }
    int out_channels() const { return weight.dim(0); }

    Tensor weight;
    Tensor bias;
    int stride;
    int pad;
};

class ConvTranspose2d : public Module {
public:
    ConvTranspose2d(int in_c, int out_c, int k, int stride, Rng& rng);
    Tensor forward(const Tensor& x) const;

    Tensor weight;
    Tensor bias;
    int stride;
};

class BatchNorm2d : public Module {
public:
    explicit BatchNorm2d(int c);
    Tensor forward(const Tensor& x);

    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
};

/// (conv3x3 -> BN -> ReLU) x 2
class DoubleConv : public Module {
public:
    DoubleConv(int in_c, int out_c, Rng& rng);
    Tensor forward(const Tensor& x);
    int in_channels() const { return c1.in_channels(); }

private:
    Conv2d c1;
    BatchNorm2d b1;
    Conv2d c2;
    BatchNorm2d b2;
};

/// maxpool 2x2 -> DoubleConv
class Down : public Module {
public:
    Down(int in_c, int out_c, Rng& rng);
    Tensor forward(const Tensor& x);
    int in_channels() const { return conv.in_channels(); }

private:
    DoubleConv conv;
};

/// 2x transposed conv, concat with skip, DoubleConv.
class Up : public Module {
public:
    Up(int in_c, int skip_c, int out_c, Rng& rng);
    Tensor forward(const Tensor& x, const Tensor& skip);

private:
    ConvTranspose2d up;
    DoubleConv conv;
};

}  // namespace hdrt::nn
