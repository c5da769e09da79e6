#pragma once

// Procedural RGB-thermal scenes and on-disk dataset assembly.

#include <array>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "hdrt/hdr.hpp"
#include "hdrt/image.hpp"
#include "hdrt/parallel.hpp"
#include "hdrt/register.hpp"

namespace hdrt::data {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kTempMin = -20.0;
inline constexpr double kTempMax = 100.0;

struct GeneratorConfig {
    int width = 56;
    int height = 56;
    double radiance_min = 1e-2;
    double radiance_max = 1e3;
    int object_count = 6;
    /// Fraction of objects whose temperature is drawn independently of radiance.
    double decorrelated_fraction = 0.2;
    double ir_blur_sigma = 1.5;
    /// Maximum corner displacement of the RGB->IR parallax homography, pixels.
    double max_parallax = 8.0;
    std::vector<double> exposures = {0.0025, 0.02, 0.16};
    std::string crf = "linear";  ///< "linear" or "gamma"
    double noise_sigma = 0.0;    ///< code units
    /// Per-scene exposure key is drawn from [key_min, key_max] (log10 radiance).
    double key_min = -2.0;
    double key_max = 2.5;

    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
    hdr::CameraResponse response() const;
};

struct SceneObject {
    bool ellipse = false;
    double cx = 0, cy = 0, rx = 0, ry = 0;
    double log_radiance = 0;  ///< log10 of the object's mean luminance
    std::array<double, 3> color{1, 1, 1};
    double temperature = 0;
    bool decorrelated = false;
};

struct Scene {
    RadianceImage radiance;  ///< width x height
    Plane temperature;       ///< degrees C, same grid as radiance
    Plane temperature_canvas;  ///< temperature with `margin` extra pixels on each side
    int margin = 0;
    std::vector<SceneObject> objects;
};

/// Temperature assigned to a log10 luminance by the correlated model.
double correlated_temperature(double log10_luminance, const GeneratorConfig& cfg);

Scene generate_scene(std::uint64_t seed, const GeneratorConfig& cfg);

/// Random RGB->IR homography with each image corner moved by at most
/// max_displacement pixels.
reg::Homography random_parallax(std::uint64_t seed, int width, int height, double max_displacement);

/// IR frame on the IR sensor grid: blurred temperature seen through
/// `parallax` (RGB pixel t appears at IR pixel parallax(t)).
IrImage render_ir(const Scene& scene, const reg::Homography& parallax, double blur_sigma);

/// Exact correspondences (IR source, RGB target) on a grid of RGB points.
reg::CorrespondenceSet parallax_correspondences(const reg::Homography& parallax, int width, int height);

enum class ExposureClass { over, under, well };
std::string to_string(ExposureClass c);
ExposureClass parse_exposure_class(const std::string& s);

/// over: > 25% of samples at 255; under: > 25% at 0; otherwise well.
ExposureClass classify_exposure(const SdrImage& frame);

struct SceneRecord {
    std::string scene_id;
    std::filesystem::path hdr_gt;
    std::vector<std::filesystem::path> brackets;  ///< increasing exposure
    std::vector<double> exposure_times;
    std::filesystem::path ir;
    std::filesystem::path correspondences;
    ExposureClass exposure_class = ExposureClass::well;

    /// Index of the frame used as single-exposure network input (the middle one).
    std::size_t input_frame() const { return brackets.size() / 2; }
    nlohmann::json to_json() const;
    static SceneRecord from_json(const nlohmann::json& j);
};

/// Writes gt, brackets, IR and correspondences into `scene_dir` (paths in the
/// record are relative to `scene_dir`'s parent).
SceneRecord simulate_capture(const Scene& scene, const hdr::CameraResponse& response,
                             const std::vector<double>& exposures, const reg::Homography& parallax, double noise_sigma,
                             std::uint64_t seed, const std::filesystem::path& scene_dir, const std::string& scene_id,
                             double ir_blur_sigma = 1.5);

struct Manifest {
    std::filesystem::path root;  ///< directory holding manifest.json
    std::vector<SceneRecord> scenes;
    std::vector<std::string> train;
    std::vector<std::string> val;
    GeneratorConfig config;
    std::uint64_t seed = 0;

    const SceneRecord& scene(const std::string& id) const;
    std::filesystem::path resolve(const std::filesystem::path& p) const { return root / p; }
    nlohmann::json to_json() const;
};

/// Number of training scenes for an 80/20 split.
int train_count(int n_scenes);

/// Generates n scenes under out_dir, each written atomically, then writes
/// out_dir/manifest.json.
Manifest build_dataset(int n_scenes, const std::filesystem::path& out_dir, const GeneratorConfig& cfg,
                       std::uint64_t seed, Exec exec = Exec::parallel);

Manifest load_manifest(const std::filesystem::path& manifest_path);

/// Throws DataError unless every referenced file exists and decodes.
void validate_manifest(const Manifest& m);

/// Per-scene seed derived from the dataset seed.
std::uint64_t scene_seed(std::uint64_t dataset_seed, int index);

}  // namespace hdrt::data
