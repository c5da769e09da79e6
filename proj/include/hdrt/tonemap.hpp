#pragma once

#include <stdexcept>

#include "hdrt/image.hpp"
#include "hdrt/parallel.hpp"

namespace hdrt::tonemap {

class TonemapError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bilateral-grid approximation of the bilateral filter of a 1-channel map.
/// The grid cell is sigma_s pixels by sigma_r value units.
Plane bilateral_filter_fast(const Plane& img, double sigma_s, double sigma_r, Exec exec = Exec::parallel);

struct DurandParams {
    double sigma_s = 0.0;  ///< pixels; <= 0 selects 2% of the image diagonal
    double sigma_r = 0.4;  ///< log10 units
    double target_contrast = 1.5;
    double saturation = 0.6;
    double gamma = 2.2;
};

struct DurandResult {
    SdrImage image;
    Plane log_luminance;  ///< log10 Y of the input
    Plane base;
    Plane detail;
    Plane output_log;  ///< compressed log10 luminance before colour and gamma
    double compression = 1.0;
    double offset = 0.0;
};

/// Full Durand decomposition, keeping intermediates.
DurandResult durand(const RadianceImage& scene, const DurandParams& params = {}, Exec exec = Exec::parallel);

SdrImage durand_tonemap(const RadianceImage& scene, const DurandParams& params = {});

/// Percentile (0..100) of the finite samples with linear interpolation.
double percentile(const Plane& p, double q);

}  // namespace hdrt::tonemap
