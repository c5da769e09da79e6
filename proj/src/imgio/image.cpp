#include "hdrt/image.hpp"

#include <cmath>

namespace hdrt {

void RadianceImage::validate() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const float v = data_[i];
        if (!std::isfinite(v) || v < 0.0f)
            throw std::invalid_argument("RadianceImage: sample " + std::to_string(i) +
                                        " is negative or non-finite");
    }
}

Plane IrImage::normalized() const {
    Plane out(width_, height_, 1);
    const double span = calib_max_ - calib_min_;
    for (std::size_t i = 0; i < data_.size(); ++i)
        out.storage()[i] = static_cast<float>((data_[i] - calib_min_) / span);
    return out;
}

Plane luminance(const RadianceImage& image) {
    Plane y(image.width(), image.height(), 1);
    const auto& s = image.storage();
    for (std::size_t p = 0; p < image.pixel_count(); ++p)
        y.storage()[p] = luminance(s[3 * p], s[3 * p + 1], s[3 * p + 2]);
    return y;
}

}  // namespace hdrt
