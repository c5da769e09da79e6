#pragma once
// Small helpers shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "hdrt/image.hpp"

namespace hdrt::test {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    auto p = std::filesystem::temp_directory_path() / ("hdrt_" + tag + "_" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Radiance with log10 luminance uniform in [lo, hi] and mild colour.
inline RadianceImage random_radiance(int w, int h, std::uint64_t seed, double lo = -2, double hi = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi), c(0.6, 1.0);
    RadianceImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double l = std::pow(10.0, u(rng));
            for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<float>(l * c(rng));
        }
    return img;
}

/// Smooth positive radiance field (sum of a few sinusoids in log space).
inline RadianceImage smooth_radiance(int w, int h, std::uint64_t seed, double lo = -1, double hi = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ph(0, 6.283), fr(0.02, 0.12);
    const double a = ph(rng), b = ph(rng), fx = fr(rng), fy = fr(rng);
    RadianceImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = 0.5 + 0.25 * std::sin(fx * x + a) + 0.25 * std::cos(fy * y + b);
            const double l = std::pow(10.0, lo + (hi - lo) * t);
            img.at(x, y, 0) = static_cast<float>(l);
            img.at(x, y, 1) = static_cast<float>(l * 0.9);
            img.at(x, y, 2) = static_cast<float>(l * 0.8);
        }
    return img;
}

inline double max_abs_diff(const Raster<float>& a, const Raster<float>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a.samples()[i]) - b.samples()[i]));
    return m;
}

}  // namespace hdrt::test
