#pragma once

// Differentiable operators. Image tensors are NCHW; all ops are templated on
// the scalar type and instantiated for float and double.

#include <vector>

#include "hdrt/nn/tensor.hpp"

namespace hdrt::nn {

/// w: (out_c, in_c, k, k); b may be undefined.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b, int stride = 1,
                      int pad = 1);

/// Adjoint of conv2d. w: (in_c, out_c, k, k); output H = (H_in - 1) * stride - 2 pad + k.
template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b,
                                int stride = 2, int pad = 0);

template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& x);

/// Per-channel batch normalization. In training mode the batch statistics
/// are used and the running statistics (if given) updated with `momentum`.
template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                         std::vector<T>* running_mean, std::vector<T>* running_var, bool training,
                         double momentum = 0.1, double eps = 1e-5);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& xs);

/// x: (n, in), w: (out, in), b: (out) or undefined.
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);

/// mean |a - b|
template <typename T>
BasicTensor<T> l1_mean(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Cosine similarity of the two tensors flattened; throws on a zero norm.
template <typename T>
BasicTensor<T> cosine_sim(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Mean binary cross-entropy of probabilities p against a constant label.
template <typename T>
BasicTensor<T> bce(const BasicTensor<T>& p, T target);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s);

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T s);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

}  // namespace hdrt::nn
