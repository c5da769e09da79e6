#include <algorithm>
#include <cmath>

#include "hdrt/metrics.hpp"

namespace hdrt::metrics {

namespace {
const auto& P = kPu21BandingGlare;
}

double pu21_encode(double y) {
    y = std::clamp(std::isnan(y) ? kPuMinLuminance : y, kPuMinLuminance, kPuMaxLuminance);
    const double yp = std::pow(y, P[3]);
    return P[6] * (std::pow((P[0] + P[1] * yp) / (1.0 + P[2] * yp), P[4]) - P[5]);
}

double pu21_decode(double v) {
    const double x = std::pow(std::max(v / P[6] + P[5], 0.0), 1.0 / P[4]);
    const double yp = std::max((x - P[0]) / (P[1] - P[2] * x), 0.0);
    return std::pow(yp, 1.0 / P[3]);
}

double pu_range(double peak_luminance) { return pu21_encode(peak_luminance) - pu21_encode(kPuMinLuminance); }

}  // namespace hdrt::metrics
