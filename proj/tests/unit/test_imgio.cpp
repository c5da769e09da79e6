#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "hdrt/imgio.hpp"
#include "../support.hpp"

using namespace hdrt;
namespace fs = std::filesystem;

namespace {

// Independent RGBE decode: mantissa bytes are bin centres of a 2^(e-128) scale.
double rgbe_oracle(int m, int e) { return e == 0 ? 0.0 : std::ldexp(m + 0.5, e - 136); }

std::vector<std::uint8_t> bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_SUITE("imgio") {

TEST_CASE("1x1 PFM payload decodes to (1,1,1)") {
    auto data = bytes("PF\n1 1\n-1.0\n");
    const float one = 1.0f;
    for (int c = 0; c < 3; ++c) {
        std::uint8_t b[4];
        std::memcpy(b, &one, 4);
        data.insert(data.end(), b, b + 4);
    }
    const RadianceImage img = io::decode_pfm(data);
    CHECK(img.width() == 1);
    CHECK(img.height() == 1);
    CHECK(img.at(0, 0, 0) == 1.0f);
    CHECK(img.at(0, 0, 1) == 1.0f);
    CHECK(img.at(0, 0, 2) == 1.0f);
}

TEST_CASE("PFM round trip is bit-exact and little-endian") {
    const RadianceImage img = test::random_radiance(13, 7, 1, -6, 4);
    const auto enc = io::encode_pfm(img);
    CHECK(std::string(enc.begin(), enc.begin() + 3) == "PF\n");
    CHECK(std::string(enc.begin(), enc.end()).find("-1.0") != std::string::npos);
    CHECK(io::decode_pfm(enc) == img);

    const auto dir = test::temp_dir("pfm");
    io::write_image(img, dir / "a.pfm", io::Format::pfm);
    CHECK(io::read_radiance(dir / "a.pfm") == img);
}

TEST_CASE("RGBE pixel (128,128,128,129) decodes to 1.00390625") {
    const std::uint8_t px[4] = {128, 128, 128, 129};
    float r, g, b;
    io::rgbe_to_float(px, r, g, b);
    CHECK(r == doctest::Approx(rgbe_oracle(128, 129)).epsilon(1e-7));
    CHECK(r == doctest::Approx(1.00390625));
    CHECK(g == r);
    CHECK(b == r);
}

TEST_CASE("RGBE decoder agrees with the independent oracle on every byte pair") {
    for (int e = 100; e < 160; e += 3)
        for (int m = 0; m < 256; m += 5) {
            const std::uint8_t px[4] = {static_cast<std::uint8_t>(m), 0, 255, static_cast<std::uint8_t>(e)};
            float r, g, b;
            io::rgbe_to_float(px, r, g, b);
            CHECK(r == doctest::Approx(rgbe_oracle(m, e)).epsilon(1e-6));
            CHECK(b == doctest::Approx(rgbe_oracle(255, e)).epsilon(1e-6));
        }
}

TEST_CASE("RGBE round trip within 1% over a radiance grid") {
    // Grey pixels over 12 decades; each channel is the pixel maximum.
    std::vector<float> v;
    for (double l = -6; l <= 6; l += 0.01) v.push_back(static_cast<float>(std::pow(10.0, l)));
    v.push_back(3.7f);
    RadianceImage img(static_cast<int>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int c = 0; c < 3; ++c) img.samples()[3 * i + c] = v[i];
    const RadianceImage back = io::decode_rgbe(io::encode_rgbe(img));
    double worst = 0;
    for (std::size_t i = 0; i < img.size(); ++i)
        worst = std::max(worst, std::abs(back.samples()[i] - img.samples()[i]) / double(img.samples()[i]));
    CHECK(worst <= 0.01);
    CHECK(back.at(static_cast<int>(v.size()) - 1, 0, 0) == doctest::Approx(3.7).epsilon(0.01));
}

TEST_CASE("RGBE relative error stays within 1% for channels near the pixel maximum") {
    // The shared exponent quantizes small channels coarsely; the bound holds
    // for channels at least 0.4 of the pixel's largest channel.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> lg(-5, 5), frac(0.4, 1.0);
    RadianceImage img(500, 1);
    for (int x = 0; x < 500; ++x) {
        const double top = std::pow(10.0, lg(rng));
        img.at(x, 0, 0) = static_cast<float>(top);
        img.at(x, 0, 1) = static_cast<float>(top * frac(rng));
        img.at(x, 0, 2) = static_cast<float>(top * frac(rng));
    }
    const RadianceImage back = io::decode_rgbe(io::encode_rgbe(img));
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(back.samples()[i] - img.samples()[i]) <= 0.01 * img.samples()[i]);
}

TEST_CASE("RGBE file with run-length scanlines round trips") {
    const RadianceImage img = test::smooth_radiance(64, 9, 4);
    const auto dir = test::temp_dir("rgbe");
    io::write_image(img, dir / "a.hdr", io::Format::rgbe);
    const RadianceImage back = io::read_radiance(dir / "a.hdr");
    REQUIRE(back.width() == 64);
    for (std::size_t i = 0; i < img.size(); i += 3)
        CHECK(std::abs(back.samples()[i] - img.samples()[i]) <= 0.01 * img.samples()[i]);
}

TEST_CASE("PNG and PPM round trips are exact, exposure time kept in the sidecar") {
    std::mt19937 rng(5);
    SdrImage img(17, 11, 0.125);
    for (auto& v : img.samples()) v = static_cast<std::uint8_t>(rng() & 255);
    const auto dir = test::temp_dir("png");
    io::write_image(img, dir / "a.png", io::Format::png);
    io::write_image(img, dir / "a.ppm", io::Format::ppm);
    const SdrImage p = io::read_sdr(dir / "a.png");
    const SdrImage q = io::read_sdr(dir / "a.ppm");
    CHECK(p == img);
    CHECK(q == img);
    CHECK(p.exposure_time() == 0.125);
}

TEST_CASE("PGM16 IR round trip is exact on the code grid") {
    std::mt19937 rng(6);
    std::uniform_real_distribution<float> t(-20.0f, 100.0f);
    IrImage ir(9, 6);
    for (auto& v : ir.samples()) v = t(rng);
    const auto dir = test::temp_dir("pgm");
    io::write_image(ir, dir / "a.pgm", io::Format::pgm16);
    const IrImage once = io::read_ir(dir / "a.pgm");
    CHECK(test::max_abs_diff(once, ir) <= 120.0 / 65535.0);
    CHECK(once.calib_min() == -20.0);
    CHECK(once.calib_max() == 100.0);
    io::write_image(once, dir / "b.pgm", io::Format::pgm16);
    CHECK(io::read_ir(dir / "b.pgm") == once);
}

TEST_CASE("PGM16 samples are big-endian and map linearly to the calibration range") {
    auto data = bytes("P5\n2 1\n65535\n");
    data.insert(data.end(), {0x00, 0x00, 0xff, 0xff});
    const auto [codes, maxval] = io::decode_pgm(data);
    CHECK(maxval == 65535);
    CHECK(codes.at(0, 0) == 0);
    CHECK(codes.at(1, 0) == 65535);
    const auto dir = test::temp_dir("pgm2");
    io::write_file(dir / "x.pgm", data);
    const IrImage ir = io::read_ir(dir / "x.pgm");
    CHECK(ir.at(0, 0) == doctest::Approx(-20.0));
    CHECK(ir.at(1, 0) == doctest::Approx(100.0));
}

TEST_CASE("decoders report the byte offset of malformed input") {
    SUBCASE("truncated PFM payload") {
        auto enc = io::encode_pfm(test::random_radiance(4, 4, 2));
        enc.resize(enc.size() - 5);
        try {
            io::decode_pfm(enc);
            FAIL("no error");
        } catch (const io::ImageIoError& e) {
            CHECK(e.offset() > 10);
            CHECK(std::string(e.what()).find("offset") != std::string::npos);
        }
    }
    SUBCASE("bad PFM header") { CHECK_THROWS_AS(io::decode_pfm(bytes("PX\n1 1\n-1\n")), io::ImageIoError); }
    SUBCASE("dimension overflow") {
        CHECK_THROWS_AS(io::decode_pfm(bytes("PF\n99999999 99999999\n-1.0\n")), io::ImageIoError);
    }
    SUBCASE("truncated PPM") {
        auto d = bytes("P6\n4 4\n255\n");
        d.resize(d.size() + 10, 7);
        try {
            io::decode_ppm(d);
            FAIL("no error");
        } catch (const io::ImageIoError& e) {
            CHECK(e.offset() >= 11);
        }
    }
    SUBCASE("truncated RGBE") {
        auto enc = io::encode_rgbe(test::random_radiance(16, 4, 2));
        enc.resize(enc.size() / 2);
        CHECK_THROWS_AS(io::decode_rgbe(enc), io::ImageIoError);
    }
    SUBCASE("not a PNG") { CHECK_THROWS_AS(io::decode_png(bytes("hello world, not png")), io::ImageIoError); }
}

TEST_CASE("incompatible kind and format pairs are rejected") {
    const auto dir = test::temp_dir("kind");
    CHECK_THROWS(io::write_image(RadianceImage(2, 2), dir / "a.png", io::Format::png));
    CHECK_THROWS(io::write_image(SdrImage(2, 2), dir / "a.pfm", io::Format::pfm));
    CHECK_THROWS(io::write_image(IrImage(2, 2), dir / "a.png", io::Format::png));
    CHECK_THROWS(io::read_radiance(dir / "missing.pfm"));
}

TEST_CASE("format names and extensions") {
    CHECK(io::format_from_path("x.hdr") == io::Format::rgbe);
    CHECK(io::format_from_path("x.pfm") == io::Format::pfm);
    CHECK(io::format_from_path("x.PNG") == io::Format::png);
    CHECK(io::format_from_path("x.ppm") == io::Format::ppm);
    CHECK(io::format_from_path("x.pgm") == io::Format::pgm16);
    CHECK(io::parse_format("pgm16") == io::Format::pgm16);
    CHECK_THROWS(io::parse_format("exr"));
}

TEST_CASE("luminance uses Rec. 709 weights") {
    RadianceImage img(3, 1);
    img.at(0, 0, 0) = img.at(0, 0, 1) = img.at(0, 0, 2) = 1.0f;
    img.at(1, 0, 0) = 1.0f;
    img.at(2, 0, 2) = 2.0f;
    const Plane y = luminance(img);
    CHECK(y.at(0, 0) == doctest::Approx(1.0));
    CHECK(y.at(1, 0) == doctest::Approx(0.2126));
    CHECK(y.at(2, 0) == doctest::Approx(2 * 0.0722));
}

TEST_CASE("luminance is convex per pixel and linear in scale") {
    const RadianceImage img = test::random_radiance(20, 20, 8);
    const Plane y = luminance(img);
    RadianceImage scaled = img;
    for (auto& v : scaled.samples()) v *= 3.5f;
    const Plane ys = luminance(scaled);
    for (int yy = 0; yy < 20; ++yy)
        for (int x = 0; x < 20; ++x) {
            const float lo = std::min({img.at(x, yy, 0), img.at(x, yy, 1), img.at(x, yy, 2)});
            const float hi = std::max({img.at(x, yy, 0), img.at(x, yy, 1), img.at(x, yy, 2)});
            CHECK(y.at(x, yy) >= lo * (1 - 1e-6f));
            CHECK(y.at(x, yy) <= hi * (1 + 1e-6f));
            CHECK(ys.at(x, yy) == doctest::Approx(3.5 * y.at(x, yy)).epsilon(1e-6));
        }
}

TEST_CASE("image invariants") {
    CHECK_THROWS(SdrImage(2, 2, 0.0));
    CHECK_THROWS(IrImage(2, 2, 0.0f, 5.0, 5.0));
    RadianceImage bad(1, 1);
    bad.at(0, 0, 1) = -1.0f;
    CHECK_THROWS(bad.validate());
    bad.at(0, 0, 1) = std::nanf("");
    CHECK_THROWS(bad.validate());
    IrImage ir(1, 1, 40.0f);
    CHECK(ir.normalized().at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("sidecar JSON round trip") {
    const auto dir = test::temp_dir("side");
    io::write_sidecar(dir / "f.png", io::Sidecar{0.5, std::nullopt, 30.0});
    const auto s = io::read_sidecar(dir / "f.png");
    REQUIRE(s.has_value());
    CHECK(s->exposure_time == 0.5);
    CHECK(!s->calib_min.has_value());
    CHECK(s->calib_max == 30.0);
    CHECK(!io::read_sidecar(dir / "none.png").has_value());
}

}  // TEST_SUITE
