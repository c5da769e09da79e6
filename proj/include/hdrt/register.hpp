#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hdrt/image.hpp"
#include "hdrt/parallel.hpp"

namespace hdrt::reg {

class RegistrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Projective map from source (IR) pixel coordinates to target (RGB) pixel
/// coordinates, normalized so m[2][2] == 1.
class Homography {
public:
    Homography();  // identity
    explicit Homography(const std::array<double, 9>& row_major);

    double operator()(int r, int c) const { return m_[3 * r + c]; }
    const std::array<double, 9>& row_major() const { return m_; }

    Point apply(Point p) const;
    Homography inverse() const;
    double determinant() const;
    /// this * other, i.e. apply `other` first.
    Homography compose(const Homography& other) const;

    static Homography translation(double dx, double dy);

private:
    std::array<double, 9> m_;
};

struct Correspondence {
    Point source;
    Point target;
};

/// At least four pairs; with exactly four, no three source points collinear.
class CorrespondenceSet {
public:
    explicit CorrespondenceSet(std::vector<Correspondence> pairs);
    const std::vector<Correspondence>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }

private:
    std::vector<Correspondence> pairs_;
};

struct HomographyFit {
    Homography h;
    double rmse = 0.0;  ///< reprojection RMSE in target pixels
};

/// Hartley-normalized DLT; with five or more pairs the DLT result is refined by
/// Gauss-Newton on the reprojection error.
HomographyFit estimate_homography(const CorrespondenceSet& pairs);

double reprojection_rmse(const Homography& h, const CorrespondenceSet& pairs);

struct WarpResult {
    Raster<float> image;
    Mask valid;
};

inline constexpr float kInvalidSample = 0.0f;

/// Inverse mapping with bilinear sampling: out(p) = src(h^-1 p). Pixels whose
/// preimage falls outside the source get kInvalidSample and valid == 0.
WarpResult warp_image(const Raster<float>& src, const Homography& h, int out_width, int out_height,
                      Exec exec = Exec::parallel);

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    long long area() const { return static_cast<long long>(width) * height; }
    bool operator==(const Rect&) const = default;
};

/// Largest axis-aligned rectangle of nonzero mask entries (histogram-stack DP).
Rect largest_valid_rectangle(const Mask& valid);

template <typename RgbRaster, typename IrRaster>
struct CropPair {
    RgbRaster rgb;
    IrRaster ir;
    Rect rect;
};

/// Crops both rasters to the largest rectangle fully inside `ir_valid`.
CropPair<Raster<float>, Raster<float>> overlap_crop(const Raster<float>& rgb, const Raster<float>& ir_warped,
                                                    const Mask& ir_valid);
CropPair<SdrImage, IrImage> overlap_crop(const SdrImage& rgb, const IrImage& ir_warped, const Mask& ir_valid);

// {"pairs": [[sx, sy, tx, ty], ...]}
CorrespondenceSet load_correspondences(const std::filesystem::path& path);
void save_correspondences(const CorrespondenceSet& set, const std::filesystem::path& path);
// Row-major array of 9 numbers.
Homography load_homography(const std::filesystem::path& path);
void save_homography(const Homography& h, const std::filesystem::path& path);

}  // namespace hdrt::reg
