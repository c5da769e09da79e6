#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hdrt/image.hpp"

namespace hdrt::io {

enum class Format { rgbe, pfm, png, ppm, pgm16 };

Format parse_format(std::string_view name);
std::string_view format_name(Format f);
/// Guess from extension: .hdr/.rgbe, .pfm, .png, .ppm, .pgm.
Format format_from_path(const std::filesystem::path& path);

/// Decode/encode failure. `offset()` is the byte position in the file where
/// parsing stopped (0 for failures not tied to a position).
class ImageIoError : public std::runtime_error {
public:
    ImageIoError(const std::string& what, std::size_t offset = 0)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

using AnyImage = std::variant<RadianceImage, SdrImage, IrImage>;

/// RGBE/PFM decode to RadianceImage, PNG/PPM to SdrImage, PGM16 to IrImage.
AnyImage read_image(const std::filesystem::path& path, Format format);

RadianceImage read_radiance(const std::filesystem::path& path);
SdrImage read_sdr(const std::filesystem::path& path);
IrImage read_ir(const std::filesystem::path& path);

void write_image(const RadianceImage& image, const std::filesystem::path& path, Format format);
void write_image(const SdrImage& image, const std::filesystem::path& path, Format format);
void write_image(const IrImage& image, const std::filesystem::path& path, Format format);
void write_image(const AnyImage& image, const std::filesystem::path& path, Format format);

// In-memory codecs. The file-level functions above are thin wrappers.
RadianceImage decode_rgbe(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_rgbe(const RadianceImage& image);
RadianceImage decode_pfm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pfm(const RadianceImage& image);
Raster<std::uint8_t> decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const Raster<std::uint8_t>& rgb);
Raster<std::uint8_t> decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Raster<std::uint8_t>& rgb);
/// 16-bit (or 8-bit) P5; returns raw codes and the declared maxval.
std::pair<Raster<std::uint16_t>, int> decode_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm16(const Raster<std::uint16_t>& codes);

/// Shared RGBE convention: value = (mantissa + 0.5) / 256 * 2^(exponent - 128).
void float_to_rgbe(float r, float g, float b, std::uint8_t out[4]);
void rgbe_to_float(const std::uint8_t in[4], float& r, float& g, float& b);

/// Sidecar JSON `{exposure_time, calib_min, calib_max}` stored next to the image
/// as `<image path>.json`.
struct Sidecar {
    std::optional<double> exposure_time;
    std::optional<double> calib_min;
    std::optional<double> calib_max;
};

std::filesystem::path sidecar_path(const std::filesystem::path& image_path);
std::optional<Sidecar> read_sidecar(const std::filesystem::path& image_path);
void write_sidecar(const std::filesystem::path& image_path, const Sidecar& sidecar);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace hdrt::io
