// PFM, binary Netpbm (P6 / P5) and PNG codecs.

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "cursor.hpp"
#include "hdrt/imgio.hpp"

namespace hdrt::io {

namespace {

float load_f32(const std::uint8_t* p, bool little) {
    std::uint32_t u;
    if (little)
        u = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    else
        u = p[3] | (p[2] << 8) | (p[1] << 16) | (static_cast<std::uint32_t>(p[0]) << 24);
    return std::bit_cast<float>(u);
}

void store_f32_le(std::vector<std::uint8_t>& out, float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    out.push_back(static_cast<std::uint8_t>(u));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
    out.push_back(static_cast<std::uint8_t>(u >> 16));
    out.push_back(static_cast<std::uint8_t>(u >> 24));
}

void append(std::vector<std::uint8_t>& out, const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

}  // namespace

// PFM rows are stored bottom-to-top. Negative scale means little-endian.
RadianceImage decode_pfm(std::span<const std::uint8_t> bytes) {
    detail::Cursor cur(bytes);
    cur.expect("P");
    const char kind = static_cast<char>(cur.get());
    if (kind != 'F' && kind != 'f') cur.fail("malformed header: expected PF or Pf");
    const int channels = kind == 'F' ? 3 : 1;
    const auto w = cur.read_uint();
    const auto h = cur.read_uint();
    detail::check_dimensions(cur, w, h, channels);
    cur.skip_space_and_comments();
    const std::size_t scale_offset = cur.offset();
    std::string scale_text;
    while (!cur.at_end() && !std::isspace(cur.peek())) scale_text.push_back(static_cast<char>(cur.get()));
    char* end = nullptr;
    const double scale = std::strtod(scale_text.c_str(), &end);
    if (scale_text.empty() || *end != '\0' || scale == 0.0 || !std::isfinite(scale))
        throw ImageIoError("malformed header: bad PFM scale", scale_offset);
    if (!std::isspace(cur.get())) cur.fail("malformed header: expected whitespace after scale");
    const bool little = scale < 0.0;

    const int width = static_cast<int>(w), height = static_cast<int>(h);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * 4;
    RadianceImage img(width, height);
    for (int row = 0; row < height; ++row) {
        auto data = cur.take(row_bytes);
        const int y = height - 1 - row;
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src_c = channels == 3 ? c : 0;
                img.at(x, y, c) = load_f32(&data[(static_cast<std::size_t>(x) * channels + src_c) * 4], little);
            }
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_pfm(const RadianceImage& image) {
    std::vector<std::uint8_t> out;
    append(out, "PF\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n-1.0\n");
    out.reserve(out.size() + image.size() * 4);
    for (int y = image.height() - 1; y >= 0; --y)
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < 3; ++c) store_f32_le(out, image.at(x, y, c));
    return out;
}

Raster<std::uint8_t> decode_ppm(std::span<const std::uint8_t> bytes) {
    detail::Cursor cur(bytes);
    cur.expect("P6");
    const auto w = cur.read_uint();
    const auto h = cur.read_uint();
    detail::check_dimensions(cur, w, h, 3);
    const auto maxval = cur.read_uint();
    if (maxval == 0 || maxval > 255) cur.fail("malformed header: only 8-bit P6 is supported");
    if (!std::isspace(cur.get())) cur.fail("malformed header: expected whitespace before raster");
    auto data = cur.take(static_cast<std::size_t>(w * h * 3));
    Raster<std::uint8_t> img(static_cast<int>(w), static_cast<int>(h), 3);
    if (maxval == 255) {
        std::memcpy(img.storage().data(), data.data(), data.size());
    } else {
        for (std::size_t i = 0; i < data.size(); ++i)
            img.storage()[i] = static_cast<std::uint8_t>(std::lround(data[i] * 255.0 / maxval));
    }
    return img;
}

std::vector<std::uint8_t> encode_ppm(const Raster<std::uint8_t>& rgb) {
    if (rgb.channels() != 3) throw ImageIoError("PPM encoder expects 3 channels");
    std::vector<std::uint8_t> out;
    append(out, "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n");
    out.insert(out.end(), rgb.storage().begin(), rgb.storage().end());
    return out;
}

std::pair<Raster<std::uint16_t>, int> decode_pgm(std::span<const std::uint8_t> bytes) {
    detail::Cursor cur(bytes);
    cur.expect("P5");
    const auto w = cur.read_uint();
    const auto h = cur.read_uint();
    detail::check_dimensions(cur, w, h, 1);
    const auto maxval = cur.read_uint();
    if (maxval == 0 || maxval > 65535) cur.fail("malformed header: maxval out of range");
    if (!std::isspace(cur.get())) cur.fail("malformed header: expected whitespace before raster");
    const bool wide = maxval > 255;
    auto data = cur.take(static_cast<std::size_t>(w * h * (wide ? 2 : 1)));
    Raster<std::uint16_t> img(static_cast<int>(w), static_cast<int>(h), 1);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const std::uint16_t v = wide ? static_cast<std::uint16_t>((data[2 * i] << 8) | data[2 * i + 1]) : data[i];
        if (v > maxval) throw ImageIoError("sample exceeds maxval", cur.offset() - data.size() + i * (wide ? 2 : 1));
        img.storage()[i] = v;
    }
    return {std::move(img), static_cast<int>(maxval)};
}

std::vector<std::uint8_t> encode_pgm16(const Raster<std::uint16_t>& codes) {
    std::vector<std::uint8_t> out;
    append(out, "P5\n" + std::to_string(codes.width()) + " " + std::to_string(codes.height()) + "\n65535\n");
    out.reserve(out.size() + codes.size() * 2);
    for (std::uint16_t v : codes.storage()) {
        out.push_back(static_cast<std::uint8_t>(v >> 8));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
    return out;
}

Raster<std::uint8_t> decode_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw ImageIoError("malformed header: not a PNG signature", 0);
    if (bytes.size() < 24) throw ImageIoError("truncated payload: missing IHDR", bytes.size());
    const std::uint64_t w = (std::uint64_t{bytes[16]} << 24) | (bytes[17] << 16) | (bytes[18] << 8) | bytes[19];
    const std::uint64_t h = (std::uint64_t{bytes[20]} << 24) | (bytes[21] << 16) | (bytes[22] << 8) | bytes[23];
    {
        detail::Cursor at_ihdr(bytes);
        at_ihdr.take(16);
        detail::check_dimensions(at_ihdr, w, h, 3);
    }

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw ImageIoError(std::string("malformed PNG: ") + image.message, 8);
    image.format = PNG_FORMAT_RGB;
    Raster<std::uint8_t> out(static_cast<int>(image.width), static_cast<int>(image.height), 3);
    if (!png_image_finish_read(&image, nullptr, out.storage().data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("truncated or corrupt PNG payload: " + msg, 33);
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const Raster<std::uint8_t>& rgb) {
    if (rgb.channels() != 3) throw ImageIoError("PNG encoder expects 3 channels");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(rgb.width());
    image.height = static_cast<png_uint_32>(rgb.height());
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.storage().data(), 0, nullptr))
        throw ImageIoError(std::string("PNG encode failed: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.storage().data(), 0, nullptr))
        throw ImageIoError(std::string("PNG encode failed: ") + image.message);
    out.resize(size);
    return out;
}

}  // namespace hdrt::io
