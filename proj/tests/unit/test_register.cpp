#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "hdrt/register.hpp"
#include "../support.hpp"

using namespace hdrt;
using reg::Homography;
using reg::Point;

namespace {

std::vector<Point> general_points(int n, std::uint64_t seed, double extent = 60) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, extent);
    std::vector<Point> p;
    for (int i = 0; i < n; ++i) p.push_back({u(rng), u(rng)});
    return p;
}

reg::CorrespondenceSet mapped(const std::vector<Point>& src, const Homography& h) {
    std::vector<reg::Correspondence> c;
    for (const auto& p : src) c.push_back({p, h.apply(p)});
    return reg::CorrespondenceSet(c);
}

Homography random_h(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> s(-0.1, 0.1), t(-6, 6), q(-1e-3, 1e-3);
    return Homography({1 + s(rng), s(rng), t(rng), s(rng), 1 + s(rng), t(rng), q(rng), q(rng), 1});
}

Raster<float> smooth_plane(int w, int h) {
    Raster<float> img(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            img.at(x, y) = static_cast<float>(0.5 + 0.3 * std::sin(0.11 * x) * std::cos(0.07 * y) + 0.1 * std::sin(0.05 * (x + y)));
    return img;
}

// Exhaustive O(n^4)-ish search over all rectangles via a 2-D prefix sum.
long long brute_max_rect(const Mask& m) {
    const int w = m.width(), h = m.height();
    std::vector<int> ps((w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            ps[(y + 1) * (w + 1) + x + 1] =
                (m.at(x, y) ? 1 : 0) + ps[y * (w + 1) + x + 1] + ps[(y + 1) * (w + 1) + x] - ps[y * (w + 1) + x];
    auto count = [&](int x0, int y0, int x1, int y1) {
        return ps[y1 * (w + 1) + x1] - ps[y0 * (w + 1) + x1] - ps[y1 * (w + 1) + x0] + ps[y0 * (w + 1) + x0];
    };
    long long best = 0;
    for (int y0 = 0; y0 < h; ++y0)
        for (int y1 = y0 + 1; y1 <= h; ++y1)
            for (int x0 = 0; x0 < w; ++x0)
                for (int x1 = x0 + 1; x1 <= w; ++x1) {
                    const long long a = static_cast<long long>(x1 - x0) * (y1 - y0);
                    if (a <= best) continue;
                    if (count(x0, y0, x1, y1) == a) best = a;
                    else break;  // widening further only adds invalid cells
                }
    return best;
}

bool rect_all_valid(const Mask& m, const reg::Rect& r) {
    for (int y = r.y; y < r.y + r.height; ++y)
        for (int x = r.x; x < r.x + r.width; ++x)
            if (!m.at(x, y)) return false;
    return true;
}

}  // namespace

TEST_SUITE("register") {

TEST_CASE("identity correspondences give the identity") {
    const auto pts = general_points(4, 1);
    const auto fit = reg::estimate_homography(mapped(pts, Homography()));
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(std::abs(fit.h(r, c) - (r == c ? 1.0 : 0.0)) <= 1e-9);
}

TEST_CASE("pure translation is recovered in closed form") {
    const auto fit = reg::estimate_homography(mapped(general_points(6, 2), Homography::translation(5, -3)));
    const std::array<double, 9> expect = {1, 0, 5, 0, 1, -3, 0, 0, 1};
    for (int i = 0; i < 9; ++i) CHECK(std::abs(fit.h.row_major()[i] - expect[i]) <= 1e-9);
}

TEST_CASE("random homographies are recovered within 1e-6 from 8 pairs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Homography h = random_h(seed);
        const auto fit = reg::estimate_homography(mapped(general_points(8, 50 + seed), h));
        for (int i = 0; i < 9; ++i) CHECK(std::abs(fit.h.row_major()[i] - h.row_major()[i]) <= 1e-6);
        CHECK(fit.rmse < 1e-6);
    }
}

TEST_CASE("estimate is invariant to correspondence order") {
    const Homography h = random_h(7);
    auto pts = general_points(10, 8);
    const auto a = reg::estimate_homography(mapped(pts, h)).h;
    std::reverse(pts.begin(), pts.end());
    std::rotate(pts.begin(), pts.begin() + 3, pts.end());
    const auto b = reg::estimate_homography(mapped(pts, h)).h;
    for (int i = 0; i < 9; ++i) CHECK(std::abs(a.row_major()[i] - b.row_major()[i]) <= 1e-9);
}

TEST_CASE("composition of two estimated stages matches a direct estimate") {
    const Homography h1 = random_h(11), h2 = random_h(12);
    const auto pts = general_points(8, 13);
    const auto e1 = reg::estimate_homography(mapped(pts, h1)).h;
    std::vector<Point> mid;
    for (const auto& p : pts) mid.push_back(h1.apply(p));
    const auto e2 = reg::estimate_homography(mapped(mid, h2)).h;
    const auto direct = reg::estimate_homography(mapped(pts, h2.compose(h1))).h;
    const auto composed = e2.compose(e1);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(direct.row_major()[i] - composed.row_major()[i]) <= 1e-6);
}

TEST_CASE("homography algebra") {
    const Homography h = random_h(3);
    const Homography id = h.compose(h.inverse());
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(std::abs(id(r, c) - (r == c ? 1.0 : 0.0)) <= 1e-12);
    const Point p{12.5, 7.25};
    const Point q = h.inverse().apply(h.apply(p));
    CHECK(q.x == doctest::Approx(p.x));
    CHECK(q.y == doctest::Approx(p.y));
    CHECK(h(2, 2) == 1.0);
}

TEST_CASE("degenerate configurations are rejected") {
    CHECK_THROWS_AS(reg::CorrespondenceSet({{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}}),
                    reg::RegistrationError);
    CHECK_THROWS_AS(reg::CorrespondenceSet({{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}, {{5, 0}, {5, 0}}}),
                    reg::RegistrationError);
    std::vector<reg::Correspondence> line;
    for (int i = 0; i < 6; ++i) line.push_back({{double(i), 2.0 * i}, {double(i), 2.0 * i}});
    CHECK_THROWS_AS(reg::estimate_homography(reg::CorrespondenceSet(line)), reg::RegistrationError);
}

TEST_CASE("warp by identity and by translation") {
    const auto img = smooth_plane(30, 20);
    const auto id = reg::warp_image(img, Homography(), 30, 20);
    CHECK(id.image == img);
    for (auto v : id.valid.samples()) CHECK(v == 1);

    const auto t = reg::warp_image(img, Homography::translation(10, 0), 30, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 30; ++x) {
            if (x >= 10) {
                CHECK(t.valid.at(x, y) == 1);
                CHECK(t.image.at(x, y) == img.at(x - 10, y));
            } else {
                CHECK(t.valid.at(x, y) == 0);
                CHECK(t.image.at(x, y) == reg::kInvalidSample);
            }
        }
}

TEST_CASE("warp round trip MAE within 2/255 on interior pixels") {
    const auto img = smooth_plane(64, 64);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Homography h = random_h(seed + 30);
        const auto fwd = reg::warp_image(img, h, 64, 64);
        const auto back = reg::warp_image(fwd.image, h.inverse(), 64, 64);
        double sum = 0;
        int n = 0;
        for (int y = 8; y < 56; ++y)
            for (int x = 8; x < 56; ++x) {
                if (!back.valid.at(x, y)) continue;
                const Point p = h.apply({double(x), double(y)});
                // Skip pixels whose intermediate sample touched the invalid border.
                if (p.x < 1 || p.y < 1 || p.x > 62 || p.y > 62) continue;
                sum += std::abs(back.image.at(x, y) - img.at(x, y));
                ++n;
            }
        REQUIRE(n > 1000);
        CHECK(sum / n <= 2.0 / 255.0);
    }
}

TEST_CASE("warp serial and parallel agree bit for bit") {
    const auto img = smooth_plane(50, 40);
    const Homography h = random_h(4);
    const auto s = reg::warp_image(img, h, 45, 35, Exec::serial);
    const auto p = reg::warp_image(img, h, 45, 35, Exec::parallel);
    CHECK(s.image == p.image);
    CHECK(s.valid == p.valid);
}

TEST_CASE("largest rectangle on simple masks") {
    Mask full(12, 9, 1, 1);
    CHECK(reg::largest_valid_rectangle(full) == reg::Rect{0, 0, 12, 9});
    Mask left(12, 9, 1, 0);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 6; ++x) left.at(x, y) = 1;
    const auto r = reg::largest_valid_rectangle(left);
    CHECK(r.width == 6);
    CHECK(r.height == 9);
    CHECK(reg::largest_valid_rectangle(Mask(5, 5, 1, 0)).area() == 0);
}

TEST_CASE("largest rectangle is maximal against brute force on rotated-warp masks") {
    for (int k = 0; k < 8; ++k) {
        const double a = 0.05 + 0.08 * k;
        const double c = std::cos(a), s = std::sin(a);
        // Rotation about the centre plus a small shift.
        const Homography rot({c, -s, 32 - 32 * c + 32 * s + k, s, c, 32 - 32 * s - 32 * c - k, 0, 0, 1});
        const auto w = reg::warp_image(Raster<float>(64, 64, 1, 1.0f), rot, 64, 64);
        const auto r = reg::largest_valid_rectangle(w.valid);
        CHECK(rect_all_valid(w.valid, r));
        CHECK(r.area() == brute_max_rect(w.valid));
    }
}

TEST_CASE("largest rectangle is maximal on random blob masks") {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        Mask m(64, 64, 1, 1);
        for (int k = 0; k < 12; ++k) {
            const int cx = rng() % 64, cy = rng() % 64, rad = 2 + rng() % 6;
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x)
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= rad * rad) m.at(x, y) = 0;
        }
        const auto r = reg::largest_valid_rectangle(m);
        CHECK(rect_all_valid(m, r));
        CHECK(r.area() == brute_max_rect(m));
    }
}

TEST_CASE("overlap crop") {
    SdrImage rgb(20, 10, 0.5);
    for (std::size_t i = 0; i < rgb.size(); ++i) rgb.samples()[i] = static_cast<std::uint8_t>(i);
    IrImage ir(20, 10, 25.0f);
    SUBCASE("full mask keeps everything") {
        const auto p = reg::overlap_crop(rgb, ir, Mask(20, 10, 1, 1));
        CHECK(p.rgb == rgb);
        CHECK(p.ir.width() == 20);
    }
    SUBCASE("left half") {
        Mask m(20, 10, 1, 0);
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x) m.at(x, y) = 1;
        const auto p = reg::overlap_crop(rgb, ir, m);
        CHECK(p.rgb.width() == 10);
        CHECK(p.ir.width() == 10);
        CHECK(p.rgb.height() == p.ir.height());
        CHECK(p.rgb.exposure_time() == 0.5);
        CHECK(p.rgb.at(3, 4, 1) == rgb.at(3, 4, 1));
    }
    SUBCASE("empty overlap") { CHECK_THROWS_AS(reg::overlap_crop(rgb, ir, Mask(20, 10, 1, 0)), reg::RegistrationError); }
    SUBCASE("size mismatch") { CHECK_THROWS(reg::overlap_crop(rgb, IrImage(19, 10), Mask(20, 10, 1, 1))); }
}

TEST_CASE("correspondence and homography JSON") {
    const auto dir = test::temp_dir("reg");
    const Homography h = random_h(21);
    const auto set = mapped(general_points(5, 22), h);
    reg::save_correspondences(set, dir / "c.json");
    const auto back = reg::load_correspondences(dir / "c.json");
    REQUIRE(back.size() == 5);
    CHECK(back.pairs()[2].target.x == set.pairs()[2].target.x);
    reg::save_homography(h, dir / "h.json");
    CHECK(reg::load_homography(dir / "h.json").row_major() == h.row_major());
    std::ofstream(dir / "bad.json") << R"({"pairs": [[1,2,3]]})";
    CHECK_THROWS(reg::load_correspondences(dir / "bad.json"));
}

}  // TEST_SUITE
