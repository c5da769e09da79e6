#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hdrt/kernels.hpp"

namespace hdrt::kernels {

std::vector<double> gaussian_taps(double sigma, int radius) {
    if (!(sigma > 0.0) || radius < 0) throw std::invalid_argument("gaussian_taps: sigma must be > 0");
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

void separable_filter_valid(std::span<const double> in, int width, int height, std::span<const double> taps,
                            std::span<double> out, Exec exec) {
    const int k = static_cast<int>(taps.size());
    const int ow = width - k + 1, oh = height - k + 1;
    if (ow <= 0 || oh <= 0) throw std::invalid_argument("separable_filter_valid: image smaller than window");
    if (out.size() != static_cast<std::size_t>(ow) * oh) throw std::invalid_argument("separable_filter_valid: bad output size");
    // Horizontal pass over all rows, then vertical pass.
    std::vector<double> tmp(static_cast<std::size_t>(ow) * height);
    parallel_for(exec, height, [&](std::int64_t y) {
        const double* row = in.data() + y * width;
        double* dst = tmp.data() + y * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * row[x + i];
            dst[x] = acc;
        }
    });
    parallel_for(exec, oh, [&](std::int64_t y) {
        double* dst = out.data() + y * ow;
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * tmp[(y + i) * ow + x];
            dst[x] = acc;
        }
    });
}

void separable_filter_same(std::span<const float> in, int width, int height, std::span<const double> taps,
                           std::span<float> out, Exec exec) {
    const int k = static_cast<int>(taps.size());
    const int r = k / 2;
    std::vector<double> tmp(static_cast<std::size_t>(width) * height);
    parallel_for(exec, height, [&](std::int64_t y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                const int sx = std::clamp(x + i - r, 0, width - 1);
                acc += taps[i] * in[y * width + sx];
            }
            tmp[y * width + x] = acc;
        }
    });
    parallel_for(exec, height, [&](std::int64_t y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) {
                const int sy = std::clamp(static_cast<int>(y) + i - r, 0, height - 1);
                acc += taps[i] * tmp[static_cast<std::size_t>(sy) * width + x];
            }
            out[y * width + x] = static_cast<float>(acc);
        }
    });
}

}  // namespace hdrt::kernels
