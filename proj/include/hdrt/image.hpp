#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdrt {

/// Interleaved row-major raster: sample (x, y, c) lives at (y*width + x)*channels + c.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, int channels, T fill = T{})
        : width_(width), height_(height), channels_(channels) {
        if (width < 0 || height < 0 || channels <= 0)
            throw std::invalid_argument("Raster: negative dimension");
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }
    Raster(int width, int height, int channels, std::vector<T> data)
        : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
        if (data_.size() != static_cast<std::size_t>(width) * height * channels)
            throw std::invalid_argument("Raster: data length does not match dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    std::span<T> samples() { return data_; }
    std::span<const T> samples() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool same_shape(const Raster& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }
    bool operator==(const Raster&) const = default;

protected:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<T> data_;
};

/// Single-channel float map (luminance, log-luminance, temperature, masks).
using Plane = Raster<float>;
using Mask = Raster<std::uint8_t>;

/// Linear relative radiance, 3 channels.
class RadianceImage : public Raster<float> {
public:
    RadianceImage() : Raster<float>(0, 0, 3) {}
    RadianceImage(int width, int height, float fill = 0.0f) : Raster<float>(width, height, 3, fill) {}
    RadianceImage(int width, int height, std::vector<float> rgb)
        : Raster<float>(width, height, 3, std::move(rgb)) {}
    explicit RadianceImage(Raster<float> r) : Raster<float>(std::move(r)) {
        if (channels_ != 3) throw std::invalid_argument("RadianceImage: expected 3 channels");
    }

    /// Throws std::invalid_argument if any sample is negative or non-finite.
    void validate() const;
    bool operator==(const RadianceImage&) const = default;
};

/// 8-bit 3-channel frame tagged with its exposure time in seconds.
class SdrImage : public Raster<std::uint8_t> {
public:
    SdrImage() : Raster<std::uint8_t>(0, 0, 3) {}
    SdrImage(int width, int height, double exposure_time = 1.0)
        : Raster<std::uint8_t>(width, height, 3), exposure_time_(exposure_time) {
        check_exposure();
    }
    SdrImage(int width, int height, std::vector<std::uint8_t> rgb, double exposure_time = 1.0)
        : Raster<std::uint8_t>(width, height, 3, std::move(rgb)), exposure_time_(exposure_time) {
        check_exposure();
    }
    SdrImage(Raster<std::uint8_t> r, double exposure_time)
        : Raster<std::uint8_t>(std::move(r)), exposure_time_(exposure_time) {
        if (channels_ != 3) throw std::invalid_argument("SdrImage: expected 3 channels");
        check_exposure();
    }

    double exposure_time() const { return exposure_time_; }
    void set_exposure_time(double t) {
        exposure_time_ = t;
        check_exposure();
    }
    bool operator==(const SdrImage&) const = default;

private:
    void check_exposure() const {
        if (!(exposure_time_ > 0.0)) throw std::invalid_argument("SdrImage: exposure_time must be > 0");
    }
    double exposure_time_ = 1.0;
};

inline constexpr double kDefaultCalibMin = -20.0;
inline constexpr double kDefaultCalibMax = 100.0;

/// Thermal frame in degrees Celsius with the camera's calibrated range.
class IrImage : public Raster<float> {
public:
    IrImage() : Raster<float>(0, 0, 1) {}
    IrImage(int width, int height, float fill = 0.0f, double calib_min = kDefaultCalibMin,
            double calib_max = kDefaultCalibMax)
        : Raster<float>(width, height, 1, fill), calib_min_(calib_min), calib_max_(calib_max) {
        check_calib();
    }
    IrImage(int width, int height, std::vector<float> celsius, double calib_min = kDefaultCalibMin,
            double calib_max = kDefaultCalibMax)
        : Raster<float>(width, height, 1, std::move(celsius)), calib_min_(calib_min), calib_max_(calib_max) {
        check_calib();
    }
    IrImage(Raster<float> r, double calib_min, double calib_max)
        : Raster<float>(std::move(r)), calib_min_(calib_min), calib_max_(calib_max) {
        if (channels_ != 1) throw std::invalid_argument("IrImage: expected 1 channel");
        check_calib();
    }

    double calib_min() const { return calib_min_; }
    double calib_max() const { return calib_max_; }

    /// (T - calib_min) / (calib_max - calib_min), unclamped.
    Plane normalized() const;
    bool operator==(const IrImage&) const = default;

private:
    void check_calib() const {
        if (!(calib_min_ < calib_max_)) throw std::invalid_argument("IrImage: calib_min must be < calib_max");
    }
    double calib_min_ = kDefaultCalibMin;
    double calib_max_ = kDefaultCalibMax;
};

inline constexpr float kLumaR = 0.2126f;
inline constexpr float kLumaG = 0.7152f;
inline constexpr float kLumaB = 0.0722f;

/// Rec. 709 luminance.
Plane luminance(const RadianceImage& image);

inline float luminance(float r, float g, float b) { return kLumaR * r + kLumaG * g + kLumaB * b; }

/// Sub-rectangle copy; throws if the rectangle leaves the raster.
template <typename T>
Raster<T> crop(const Raster<T>& src, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 0 || h < 0 || x0 + w > src.width() || y0 + h > src.height())
        throw std::out_of_range("crop: rectangle outside raster");
    Raster<T> out(w, h, src.channels());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < src.channels(); ++c) out.at(x, y, c) = src.at(x0 + x, y0 + y, c);
    return out;
}

}  // namespace hdrt
