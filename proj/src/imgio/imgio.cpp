#include "hdrt/imgio.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

namespace hdrt::io {

namespace fs = std::filesystem;

Format parse_format(std::string_view name) {
    if (name == "rgbe" || name == "hdr") return Format::rgbe;
    if (name == "pfm") return Format::pfm;
    if (name == "png") return Format::png;
    if (name == "ppm") return Format::ppm;
    if (name == "pgm16" || name == "pgm") return Format::pgm16;
    throw std::invalid_argument("unknown image format '" + std::string(name) + "'");
}

std::string_view format_name(Format f) {
    switch (f) {
        case Format::rgbe: return "rgbe";
        case Format::pfm: return "pfm";
        case Format::png: return "png";
        case Format::ppm: return "ppm";
        case Format::pgm16: return "pgm16";
    }
    return "?";
}

Format format_from_path(const fs::path& path) {
    std::string ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".hdr" || ext == ".rgbe" || ext == ".pic") return Format::rgbe;
    if (ext == ".pfm") return Format::pfm;
    if (ext == ".png") return Format::png;
    if (ext == ".ppm") return Format::ppm;
    if (ext == ".pgm") return Format::pgm16;
    throw std::invalid_argument("cannot infer image format from '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ImageIoError("cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ImageIoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw ImageIoError("rename to '" + path.string() + "' failed: " + ec.message());
}

fs::path sidecar_path(const fs::path& image_path) {
    fs::path p = image_path;
    p += ".json";
    return p;
}

std::optional<Sidecar> read_sidecar(const fs::path& image_path) {
    const fs::path p = sidecar_path(image_path);
    if (!fs::exists(p)) return std::nullopt;
    std::ifstream in(p);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ImageIoError("malformed sidecar '" + p.string() + "': " + e.what());
    }
    Sidecar s;
    if (j.contains("exposure_time") && !j["exposure_time"].is_null()) s.exposure_time = j["exposure_time"].get<double>();
    if (j.contains("calib_min") && !j["calib_min"].is_null()) s.calib_min = j["calib_min"].get<double>();
    if (j.contains("calib_max") && !j["calib_max"].is_null()) s.calib_max = j["calib_max"].get<double>();
    return s;
}

void write_sidecar(const fs::path& image_path, const Sidecar& s) {
    nlohmann::json j = nlohmann::json::object();
    j["exposure_time"] = s.exposure_time ? nlohmann::json(*s.exposure_time) : nlohmann::json(nullptr);
    j["calib_min"] = s.calib_min ? nlohmann::json(*s.calib_min) : nlohmann::json(nullptr);
    j["calib_max"] = s.calib_max ? nlohmann::json(*s.calib_max) : nlohmann::json(nullptr);
    const std::string text = j.dump(2) + "\n";
    write_file(sidecar_path(image_path), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

SdrImage sdr_with_sidecar(Raster<std::uint8_t> rgb, const fs::path& path) {
    double t = 1.0;
    if (auto sc = read_sidecar(path); sc && sc->exposure_time) t = *sc->exposure_time;
    return SdrImage(std::move(rgb), t);
}

IrImage ir_from_codes(const Raster<std::uint16_t>& codes, int maxval, const fs::path& path) {
    double lo = kDefaultCalibMin, hi = kDefaultCalibMax;
    if (auto sc = read_sidecar(path)) {
        if (sc->calib_min) lo = *sc->calib_min;
        if (sc->calib_max) hi = *sc->calib_max;
    }
    if (!(lo < hi)) throw ImageIoError("sidecar calib_min must be < calib_max for '" + path.string() + "'");
    Raster<float> t(codes.width(), codes.height(), 1);
    for (std::size_t i = 0; i < codes.size(); ++i)
        t.storage()[i] = static_cast<float>(lo + (hi - lo) * codes.storage()[i] / static_cast<double>(maxval));
    return IrImage(std::move(t), lo, hi);
}

[[noreturn]] void incompatible(std::string_view kind, Format f) {
    throw ImageIoError("cannot write " + std::string(kind) + " as " + std::string(format_name(f)));
}

}  // namespace

AnyImage read_image(const fs::path& path, Format format) {
    const auto bytes = read_file(path);
    switch (format) {
        case Format::rgbe: return decode_rgbe(bytes);
        case Format::pfm: return decode_pfm(bytes);
        case Format::png: return sdr_with_sidecar(decode_png(bytes), path);
        case Format::ppm: return sdr_with_sidecar(decode_ppm(bytes), path);
        case Format::pgm16: {
            auto [codes, maxval] = decode_pgm(bytes);
            return ir_from_codes(codes, maxval, path);
        }
    }
    throw ImageIoError("unknown format");
}

RadianceImage read_radiance(const fs::path& path) {
    auto img = read_image(path, format_from_path(path));
    if (auto* r = std::get_if<RadianceImage>(&img)) return std::move(*r);
    throw ImageIoError("'" + path.string() + "' does not hold a radiance image");
}

SdrImage read_sdr(const fs::path& path) {
    auto img = read_image(path, format_from_path(path));
    if (auto* r = std::get_if<SdrImage>(&img)) return std::move(*r);
    throw ImageIoError("'" + path.string() + "' does not hold an SDR image");
}

IrImage read_ir(const fs::path& path) {
    auto img = read_image(path, format_from_path(path));
    if (auto* r = std::get_if<IrImage>(&img)) return std::move(*r);
    throw ImageIoError("'" + path.string() + "' does not hold an IR image");
}

void write_image(const RadianceImage& image, const fs::path& path, Format format) {
    switch (format) {
        case Format::rgbe: write_file(path, encode_rgbe(image)); return;
        case Format::pfm: write_file(path, encode_pfm(image)); return;
        default: incompatible("radiance image", format);
    }
}

void write_image(const SdrImage& image, const fs::path& path, Format format) {
    switch (format) {
        case Format::png: write_file(path, encode_png(image)); break;
        case Format::ppm: write_file(path, encode_ppm(image)); break;
        default: incompatible("SDR image", format);
    }
    write_sidecar(path, Sidecar{image.exposure_time(), std::nullopt, std::nullopt});
}

void write_image(const IrImage& image, const fs::path& path, Format format) {
    if (format != Format::pgm16) incompatible("IR image", format);
    Raster<std::uint16_t> codes(image.width(), image.height(), 1);
    const double lo = image.calib_min(), span = image.calib_max() - image.calib_min();
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double t = image.storage()[i];
        if (!std::isfinite(t)) throw ImageIoError("IR sample " + std::to_string(i) + " is not finite");
        codes.storage()[i] = static_cast<std::uint16_t>(std::clamp(std::lround((t - lo) / span * 65535.0), 0L, 65535L));
    }
    write_file(path, encode_pgm16(codes));
    write_sidecar(path, Sidecar{std::nullopt, image.calib_min(), image.calib_max()});
}

void write_image(const AnyImage& image, const fs::path& path, Format format) {
    std::visit([&](const auto& img) { write_image(img, path, format); }, image);
}

}  // namespace hdrt::io
