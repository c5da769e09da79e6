#pragma once

// Serial, loop-for-loop reference versions of the parallel kernels. Slow by
// design; used as oracles in tests and as baselines in the benchmarks.

#include <span>

#include "hdrt/image.hpp"
#include "hdrt/kernels.hpp"

namespace hdrt::reference {

template <typename T>
void conv2d_forward(const kernels::ConvGeometry& g, const T* x, const T* w, const T* b, T* y);

template <typename T>
void conv2d_backward_input(const kernels::ConvGeometry& g, const T* dy, const T* w, T* dx);

template <typename T>
void conv2d_backward_weight(const kernels::ConvGeometry& g, const T* x, const T* dy, T* dw, T* db);

/// Direct 2-D window sum of the outer product of `taps` (valid positions only).
void window_filter_valid(std::span<const double> in, int width, int height, std::span<const double> taps,
                         std::span<double> out);

/// Brute-force bilateral filter: Gaussian spatial weight (sigma_s, window
/// radius ceil(3 sigma_s)) times Gaussian range weight (sigma_r).
Plane bilateral_exact(const Plane& img, double sigma_s, double sigma_r);

/// Brute-force Gaussian blur with the same window as bilateral_exact.
Plane gaussian_blur_exact(const Plane& img, double sigma_s);

}  // namespace hdrt::reference
