#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdrt/image.hpp"
#include "hdrt/parallel.hpp"

namespace hdrt::metrics {

class MetricError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kDefaultPeakLuminance = 1000.0;
inline constexpr double kPsnrCap = 100.0;
inline constexpr double kPuMinLuminance = 0.005;
inline constexpr double kPuMaxLuminance = 10000.0;

/// PU21 "banding + glare" coefficients p1..p7.
inline constexpr std::array<double, 7> kPu21BandingGlare = {0.353487901,  0.3734658629, 8.277049286e-05,
                                                            0.9062562627, 0.09150303166, 0.9099517204,
                                                            596.3148142};

/// Perceptually uniform value of an absolute luminance (cd/m^2), clamped to
/// [0.005, 10000] first.
double pu21_encode(double y);
/// Inverse of pu21_encode over its range.
double pu21_decode(double v);
/// V(peak) - V(0.005).
double pu_range(double peak_luminance);

/// Factor mapping the reference maximum to `peak_luminance`.
double display_scale(const RadianceImage& ref, double peak_luminance);

/// PSNR between two already-encoded sample arrays with the given peak;
/// returns kPsnrCap when they are identical (or the result exceeds it).
double psnr(std::span<const double> a, std::span<const double> b, double peak);

/// Mean SSIM over valid 11x11 Gaussian windows of two single-channel maps.
/// Throws if either side is smaller than the window.
double ssim(std::span<const double> a, std::span<const double> b, int width, int height, double dynamic_range,
            Exec exec = Exec::parallel);

double pu_psnr(const RadianceImage& test, const RadianceImage& ref, double peak_luminance = kDefaultPeakLuminance);
double pu_ssim(const RadianceImage& test, const RadianceImage& ref, double peak_luminance = kDefaultPeakLuminance,
               Exec exec = Exec::parallel);
double pu_vsi(const RadianceImage& test, const RadianceImage& ref, double peak_luminance = kDefaultPeakLuminance,
              Exec exec = Exec::parallel);

/// Planar RGB map in display units, as consumed by the VSI core.
struct ColorPlanes {
    int width = 0;
    int height = 0;
    std::array<std::vector<double>, 3> c;
};

/// VSI on two RGB images whose samples lie in [0, 255]. Exposed for tests.
double vsi(const ColorPlanes& a, const ColorPlanes& b, Exec exec = Exec::parallel);

/// SDSP saliency map (same size as the input, values in [0, 1]).
std::vector<double> sdsp_saliency(const ColorPlanes& img);

struct MetricReport {
    double pu_psnr = 0.0;
    double pu_ssim = 0.0;
    double pu_vsi = 0.0;
    std::size_t pixel_count = 0;
    double saturated_fraction = 0.0;
    double peak_luminance = kDefaultPeakLuminance;
};

/// All three metrics. `saturated` (optional, may be empty) supplies the
/// saturated_fraction field.
MetricReport evaluate(const RadianceImage& test, const RadianceImage& ref, const Mask& saturated = {},
                      double peak_luminance = kDefaultPeakLuminance);

/// Header of the per-scene CSV.
inline constexpr const char* kCsvHeader = "scene_id,exposure_class,pu_psnr,pu_ssim,pu_vsi";
std::string csv_row(const std::string& scene_id, const std::string& exposure_class, const MetricReport& r);

}  // namespace hdrt::metrics
