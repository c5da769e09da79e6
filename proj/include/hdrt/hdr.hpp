#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdrt/image.hpp"
#include "hdrt/parallel.hpp"

namespace hdrt::hdr {

inline constexpr int kCodes = 256;
inline constexpr int kAnchorCode = 128;

class HdrError : public std::runtime_error {
public:
    enum class Kind { rank_deficient, non_increasing_exposure, dimension_mismatch, invalid_argument };
    HdrError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Triangle weight: z for z <= 127, 255 - z otherwise.
constexpr int hat_weight(int z) { return z <= 127 ? z : 255 - z; }

/// Log-inverse camera response for one channel: g[z] = ln(exposure) producing code z,
/// anchored so g[128] == 0.
struct Crf {
    std::array<double, kCodes> g{};
    double lambda = 0.0;

    bool is_monotone() const;
    /// Build from exposure(z), the (relative) exposure that produces code z. Anchored at 128.
    static Crf from_exposure_curve(const std::function<double(double)>& exposure_of_code);
    /// code = 255 * X^(1/exponent): exponent 1 is a linear sensor, 2.2 a gamma-encoding camera.
    static Crf power(double exponent);
    static Crf linear() { return power(1.0); }
};

/// One Crf per color channel.
struct CameraResponse {
    std::array<Crf, 3> channel;
    static CameraResponse uniform(const Crf& crf) { return {{crf, crf, crf}}; }
};

/// Exposure-tagged SDR frames of one static scene. Construction enforces at
/// least two frames, shared dimensions and strictly increasing exposure times.
class Bracket {
public:
    explicit Bracket(std::vector<SdrImage> frames);

    const std::vector<SdrImage>& frames() const { return frames_; }
    std::size_t size() const { return frames_.size(); }
    int width() const { return frames_.front().width(); }
    int height() const { return frames_.front().height(); }
    const SdrImage& operator[](std::size_t i) const { return frames_[i]; }

private:
    std::vector<SdrImage> frames_;
};

inline constexpr double kDefaultLambda = 50.0;
inline constexpr int kDefaultSamples = 4096;

/// Least-squares response recovery with second-difference smoothness, solved
/// independently for each channel and projected onto non-decreasing curves.
/// n_samples <= 0 selects max(kDefaultSamples, the overdetermination minimum).
CameraResponse recover_crf(const Bracket& bracket, double lambda = kDefaultLambda, int n_samples = 0);

/// Pixel indices chosen at evenly spaced luminance quantiles of the middle frame.
std::vector<std::size_t> stratified_samples(const SdrImage& frame, int n_samples);

/// Pool-adjacent-violators projection onto non-decreasing sequences.
void isotonic_project(std::span<double> values);

struct MergeResult {
    RadianceImage radiance;
    /// 1 where some channel has zero total weight over the bracket.
    Mask saturated;
    double saturated_fraction() const;
};

/// Weighted log-domain merge. Radiance unit: code 255 at exposure time 1 maps
/// to 1.0, the same convention simulate_bracket inverts.
MergeResult merge_brackets(const Bracket& bracket, const CameraResponse& response, Exec exec = Exec::parallel);

/// Render a scene through the camera: code = clamp(round(f(E * dt) + noise)).
Bracket simulate_bracket(const RadianceImage& scene, const CameraResponse& response,
                         const std::vector<double>& exposure_times, double noise_sigma = 0.0,
                         std::uint64_t seed = 0);

/// Forward camera map for one channel: fractional code for normalized exposure x.
double crf_forward(const Crf& crf, double exposure);

// JSON: array of three 256-float arrays.
std::string crf_to_json(const CameraResponse& response);
CameraResponse crf_from_json(const std::string& text);
void save_crf(const CameraResponse& response, const std::filesystem::path& path);
CameraResponse load_crf(const std::filesystem::path& path);

}  // namespace hdrt::hdr
