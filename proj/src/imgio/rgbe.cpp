// Radiance RGBE (.hdr): text header, "-Y h +X w" resolution line, then
// scanlines either flat or in the adaptive run-length scheme.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "cursor.hpp"
#include "hdrt/imgio.hpp"

namespace hdrt::io {

void float_to_rgbe(float r, float g, float b, std::uint8_t out[4]) {
    float v = std::max(r, std::max(g, b));
    if (!(v > 1e-32f)) {
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    int e = 0;
    const float m = std::frexp(v, &e);  // v = m * 2^e, m in [0.5, 1)
    if (e + 128 > 255) {
        out[0] = out[1] = out[2] = 255;
        out[3] = 255;
        return;
    }
    if (e + 128 < 1) {
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    const float scale = m * 256.0f / v;
    auto q = [&](float c) { return static_cast<std::uint8_t>(std::clamp(c * scale, 0.0f, 255.0f)); };
    out[0] = q(r);
    out[1] = q(g);
    out[2] = q(b);
    out[3] = static_cast<std::uint8_t>(e + 128);
}

void rgbe_to_float(const std::uint8_t in[4], float& r, float& g, float& b) {
    if (in[3] == 0) {
        r = g = b = 0.0f;
        return;
    }
    const float f = std::ldexp(1.0f, static_cast<int>(in[3]) - (128 + 8));
    r = (in[0] + 0.5f) * f;
    g = (in[1] + 0.5f) * f;
    b = (in[2] + 0.5f) * f;
}

namespace {

void read_rle_scanline(detail::Cursor& cur, int width, std::uint8_t* line) {
    // Caller has consumed the 4-byte marker; channels are stored planar.
    for (int ch = 0; ch < 4; ++ch) {
        int x = 0;
        while (x < width) {
            int count = cur.get();
            if (count > 128) {
                count -= 128;
                if (x + count > width) cur.fail("malformed RLE run: overruns scanline");
                const std::uint8_t v = cur.get();
                for (int i = 0; i < count; ++i) line[4 * (x++) + ch] = v;
            } else {
                if (count == 0 || x + count > width) cur.fail("malformed RLE dump: bad length");
                auto run = cur.take(static_cast<std::size_t>(count));
                for (int i = 0; i < count; ++i) line[4 * (x++) + ch] = run[i];
            }
        }
    }
}

void write_rle_channel(std::vector<std::uint8_t>& out, const std::uint8_t* data, int width) {
    // data is strided by 4 (one channel of an RGBE scanline).
    auto at = [&](int i) { return data[4 * i]; };
    int x = 0;
    while (x < width) {
        // Find the next run of >= 4 equal bytes.
        int run_start = x;
        int run_len = 0;
        while (run_start < width) {
            run_len = 1;
            while (run_start + run_len < width && run_len < 127 && at(run_start + run_len) == at(run_start))
                ++run_len;
            if (run_len >= 4) break;
            run_start += run_len;
        }
        if (run_start >= width) run_len = 0;
        // Literal bytes before the run.
        while (x < run_start) {
            const int n = std::min(128, run_start - x);
            out.push_back(static_cast<std::uint8_t>(n));
            for (int i = 0; i < n; ++i) out.push_back(at(x + i));
            x += n;
        }
        if (run_len >= 4) {
            out.push_back(static_cast<std::uint8_t>(128 + run_len));
            out.push_back(at(run_start));
            x += run_len;
        }
    }
}

}  // namespace

RadianceImage decode_rgbe(std::span<const std::uint8_t> bytes) {
    detail::Cursor cur(bytes);
    if (cur.remaining() < 2 || bytes[0] != '#' || bytes[1] != '?') cur.fail("malformed header: missing #? magic");
    cur.read_line();
    bool format_ok = true;
    for (;;) {
        const std::string line = cur.read_line();
        if (line.empty()) break;
        if (line.rfind("FORMAT=", 0) == 0) format_ok = (line == "FORMAT=32-bit_rle_rgbe");
    }
    if (!format_ok) cur.fail("malformed header: unsupported FORMAT");

    const std::size_t res_offset = cur.offset();
    const std::string res = cur.read_line();
    long long h = 0, w = 0;
    char ybuf[3] = {}, xbuf[3] = {};
    if (std::sscanf(res.c_str(), "%2s %lld %2s %lld", ybuf, &h, xbuf, &w) != 4 || std::string(ybuf) != "-Y" ||
        std::string(xbuf) != "+X")
        throw ImageIoError("malformed header: only '-Y h +X w' orientation is supported", res_offset);
    if (h < 0 || w < 0) throw ImageIoError("malformed header: negative dimension", res_offset);
    detail::check_dimensions(cur, static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(h), 4);

    const int width = static_cast<int>(w), height = static_cast<int>(h);
    RadianceImage img(width, height);
    std::vector<std::uint8_t> line(static_cast<std::size_t>(width) * 4);
    for (int y = 0; y < height; ++y) {
        const bool rle = width >= 8 && width < 0x8000 && cur.remaining() >= 4 && bytes[cur.offset()] == 2 &&
                         bytes[cur.offset() + 1] == 2 && (bytes[cur.offset() + 2] & 0x80) == 0;
        if (rle) {
            auto marker = cur.take(4);
            if (((marker[2] << 8) | marker[3]) != width) cur.fail("malformed RLE scanline: width mismatch");
            read_rle_scanline(cur, width, line.data());
        } else {
            auto flat = cur.take(line.size());
            std::memcpy(line.data(), flat.data(), line.size());
        }
        for (int x = 0; x < width; ++x) {
            float r, g, b;
            rgbe_to_float(&line[4 * x], r, g, b);
            img.at(x, y, 0) = r;
            img.at(x, y, 1) = g;
            img.at(x, y, 2) = b;
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_rgbe(const RadianceImage& image) {
    const std::string header = "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " + std::to_string(image.height()) +
                               " +X " + std::to_string(image.width()) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const int width = image.width();
    std::vector<std::uint8_t> line(static_cast<std::size_t>(width) * 4);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < width; ++x)
            float_to_rgbe(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2), &line[4 * x]);
        if (width < 8 || width >= 0x8000) {
            out.insert(out.end(), line.begin(), line.end());
            continue;
        }
        out.push_back(2);
        out.push_back(2);
        out.push_back(static_cast<std::uint8_t>(width >> 8));
        out.push_back(static_cast<std::uint8_t>(width & 0xff));
        for (int ch = 0; ch < 4; ++ch) write_rle_channel(out, line.data() + ch, width);
    }
    return out;
}

}  // namespace hdrt::io
