#pragma once

// Hot image/tensor kernels. Each has an OpenMP path selected by Exec and a
// straightforward serial counterpart in hdrt/reference.hpp that tests and
// benchmarks compare against.

#include <span>
#include <vector>

#include "hdrt/parallel.hpp"

namespace hdrt::kernels {

/// NCHW convolution geometry; weights are (out_c, in_c, kh, kw).
struct ConvGeometry {
    int batch = 1;
    int in_c = 1;
    int in_h = 1;
    int in_w = 1;
    int out_c = 1;
    int kh = 3;
    int kw = 3;
    int stride = 1;
    int pad = 1;

    int out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
    int out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
    std::size_t in_size() const { return static_cast<std::size_t>(batch) * in_c * in_h * in_w; }
    std::size_t out_size() const { return static_cast<std::size_t>(batch) * out_c * out_h() * out_w(); }
    std::size_t weight_size() const { return static_cast<std::size_t>(out_c) * in_c * kh * kw; }
};

/// y = conv(x, w) + b. `b` may be null. Overwrites y.
template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* b, T* y, Exec exec);

/// dx += conv^T(dy, w).
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* dy, const T* w, T* dx, Exec exec);

/// dw += dy (x) im2col(x); db += per-channel sums of dy (db may be null).
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* x, const T* dy, T* dw, T* db, Exec exec);

/// Normalized 1-D Gaussian taps of the given radius.
std::vector<double> gaussian_taps(double sigma, int radius);

/// Separable filter keeping only positions where the window lies inside the
/// image: output is (w - k + 1) x (h - k + 1).
void separable_filter_valid(std::span<const double> in, int width, int height, std::span<const double> taps,
                            std::span<double> out, Exec exec);

/// Separable filter with clamp-to-edge borders; output has the input size.
void separable_filter_same(std::span<const float> in, int width, int height, std::span<const double> taps,
                           std::span<float> out, Exec exec);

}  // namespace hdrt::kernels
