#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "hdrt/hdr.hpp"
#include "../support.hpp"

using namespace hdrt;
using hdr::Crf;
using hdr::CameraResponse;

namespace {

// Scene spanning enough radiance that every code 0..255 appears in some frame.
RadianceImage ramp_scene(int w, int h, std::uint64_t seed) {
    return test::random_radiance(w, h, seed, -2.5, 0.8);
}

const std::vector<double> kTimes = {1.0 / 16, 1.0 / 4, 1.0, 4.0, 16.0};

double g_rmse(const Crf& crf, const std::function<double(int)>& truth) {
    double s = 0;
    int n = 0;
    for (int z = 20; z <= 235; ++z) {
        const double d = crf.g[z] - truth(z);
        s += d * d;
        ++n;
    }
    return std::sqrt(s / n);
}

// A sample counts as unclipped when some frame saw it at a code with hat weight >= 16.
bool unclipped(const hdr::Bracket& b, std::size_t i) {
    for (const auto& f : b.frames()) {
        const int z = f.samples()[i];
        if (z >= 16 && z <= 239) return true;
    }
    return false;
}

double worst_unclipped_error(const hdr::Bracket& b, const RadianceImage& merged, const RadianceImage& truth) {
    double worst = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (unclipped(b, i))
            worst = std::max(worst, std::abs(merged.samples()[i] - truth.samples()[i]) / double(truth.samples()[i]));
    return worst;
}

}  // namespace

TEST_SUITE("hdr") {

TEST_CASE("hat weight") {
    CHECK(hdr::hat_weight(0) == 0);
    CHECK(hdr::hat_weight(255) == 0);
    CHECK(hdr::hat_weight(127) == 127);
    CHECK(hdr::hat_weight(128) == 127);
    for (int z = 0; z < 256; ++z) CHECK(hdr::hat_weight(z) == hdr::hat_weight(255 - z));
}

TEST_CASE("power CRFs are anchored and monotone") {
    for (double e : {1.0, 2.2, 1 / 2.2}) {
        const Crf c = Crf::power(e);
        CHECK(c.g[128] == 0.0);
        CHECK(c.is_monotone());
        CHECK(c.g[200] == doctest::Approx(e * std::log(200.0 / 128.0)));
    }
}

TEST_CASE("simulate_bracket edge cases") {
    const auto lin = CameraResponse::uniform(Crf::linear());
    const auto black = hdr::simulate_bracket(RadianceImage(4, 4, 0.0f), lin, {0.5, 1.0, 2.0});
    for (const auto& f : black.frames())
        for (auto v : f.samples()) CHECK(v == 0);
    const auto one = hdr::simulate_bracket(RadianceImage(2, 2, 1.0f), lin, {0.5, 1.0});
    CHECK(one[1].at(0, 0, 0) == 255);
    CHECK(one[0].at(0, 0, 0) == 128);
    CHECK(one[0].exposure_time() == 0.5);
}

TEST_CASE("simulate_bracket noise is seeded") {
    const auto lin = CameraResponse::uniform(Crf::linear());
    const auto scene = ramp_scene(16, 16, 1);
    const auto a = hdr::simulate_bracket(scene, lin, {0.25, 1.0}, 2.0, 9);
    const auto b = hdr::simulate_bracket(scene, lin, {0.25, 1.0}, 2.0, 9);
    const auto c = hdr::simulate_bracket(scene, lin, {0.25, 1.0}, 2.0, 10);
    CHECK(a[1] == b[1]);
    CHECK_FALSE(a[1] == c[1]);
}

TEST_CASE("recover_crf on a linear camera matches ln(z/128)") {
    const auto b = hdr::simulate_bracket(ramp_scene(96, 96, 2), CameraResponse::uniform(Crf::linear()), kTimes);
    const auto r = hdr::recover_crf(b);
    for (int c = 0; c < 3; ++c) {
        CHECK(r.channel[c].g[128] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.channel[c].is_monotone());
        CHECK(g_rmse(r.channel[c], [](int z) { return std::log(z / 128.0); }) < 0.05);
    }
}

TEST_CASE("recover_crf on gamma-2.2 cameras") {
    SUBCASE("code = 255 X^2.2: g = (1/2.2) ln(z/128)") {
        const auto b =
            hdr::simulate_bracket(ramp_scene(96, 96, 3), CameraResponse::uniform(Crf::power(1 / 2.2)), kTimes);
        const auto r = hdr::recover_crf(b);
        for (int c = 0; c < 3; ++c)
            CHECK(g_rmse(r.channel[c], [](int z) { return std::log(z / 128.0) / 2.2; }) < 0.05);
    }
    SUBCASE("code = 255 X^(1/2.2): g = 2.2 ln(z/128)") {
        const auto b = hdr::simulate_bracket(ramp_scene(96, 96, 4), CameraResponse::uniform(Crf::power(2.2)),
                                             {1.0 / 64, 1.0 / 16, 1.0 / 4, 1.0, 4.0, 16.0});
        const auto r = hdr::recover_crf(b);
        for (int c = 0; c < 3; ++c)
            CHECK(g_rmse(r.channel[c], [](int z) { return 2.2 * std::log(z / 128.0); }) < 0.05);
    }
}

TEST_CASE("recover_crf error cases") {
    SUBCASE("identical frames with equal exposure") {
        SdrImage f(8, 8, 1.0);
        for (std::size_t i = 0; i < f.size(); ++i) f.samples()[i] = static_cast<std::uint8_t>(i % 256);
        try {
            hdr::Bracket b({f, f});
            FAIL("accepted");
        } catch (const hdr::HdrError& e) {
            CHECK(e.kind() == hdr::HdrError::Kind::rank_deficient);
        }
    }
    SUBCASE("non-increasing exposures") {
        try {
            hdr::Bracket b({SdrImage(4, 4, 1.0), SdrImage(4, 4, 0.5)});
            FAIL("accepted");
        } catch (const hdr::HdrError& e) {
            CHECK(e.kind() == hdr::HdrError::Kind::non_increasing_exposure);
        }
    }
    SUBCASE("every sample clipped") {
        SdrImage a(8, 8, 1.0), b(8, 8, 2.0);
        for (auto& v : a.samples()) v = 255;
        for (auto& v : b.samples()) v = 255;
        try {
            hdr::recover_crf(hdr::Bracket({a, b}));
            FAIL("accepted");
        } catch (const hdr::HdrError& e) {
            CHECK(e.kind() == hdr::HdrError::Kind::rank_deficient);
        }
    }
    SUBCASE("frame size mismatch") {
        CHECK_THROWS_AS(hdr::Bracket({SdrImage(4, 4, 1.0), SdrImage(5, 4, 2.0)}), hdr::HdrError);
    }
    SUBCASE("single frame") { CHECK_THROWS_AS(hdr::Bracket({SdrImage(4, 4, 1.0)}), hdr::HdrError); }
}

TEST_CASE("merge of a constant E = 0.5 scene is within 2%") {
    const auto lin = CameraResponse::uniform(Crf::linear());
    const auto b = hdr::simulate_bracket(RadianceImage(8, 8, 0.5f), lin, {0.25, 1.0, 4.0});
    const auto m = hdr::merge_brackets(b, lin);
    for (std::size_t i = 0; i < m.radiance.size(); ++i) CHECK(std::abs(m.radiance.samples()[i] - 0.5) <= 0.01);
    CHECK(m.saturated_fraction() == 0.0);
}

TEST_CASE("pixels clipped in every frame fall back to the shortest exposure and are flagged") {
    const auto lin = CameraResponse::uniform(Crf::linear());
    RadianceImage scene(4, 1, 0.1f);
    for (int c = 0; c < 3; ++c) scene.at(2, 0, c) = 1000.0f;
    const auto b = hdr::simulate_bracket(scene, lin, {0.25, 1.0});
    const auto m = hdr::merge_brackets(b, lin);
    CHECK(m.saturated.at(2, 0) == 1);
    CHECK(m.saturated.at(0, 0) == 0);
    // Code 255 at 1/4 s reads as E = 4.
    CHECK(m.radiance.at(2, 0, 0) == doctest::Approx(4.0));
}

TEST_CASE("saturation mask marks exactly the zero-weight pixels") {
    const auto lin = CameraResponse::uniform(Crf::linear());
    const auto scene = test::random_radiance(32, 32, 5, -4, 3);
    const auto b = hdr::simulate_bracket(scene, lin, {0.1, 1.0});
    const auto m = hdr::merge_brackets(b, lin);
    for (int p = 0; p < 32 * 32; ++p) {
        bool empty = false;
        for (int c = 0; c < 3; ++c) {
            int wsum = 0;
            for (const auto& f : b.frames()) wsum += hdr::hat_weight(f.samples()[3 * p + c]);
            empty = empty || wsum == 0;
        }
        CHECK(m.saturated.samples()[p] == (empty ? 1 : 0));
    }
}

TEST_CASE("merge is exposure invariant") {
    const auto lin = CameraResponse::uniform(Crf::linear());
    const auto scene = test::random_radiance(24, 24, 6, -1.5, 0.5);
    const auto b = hdr::simulate_bracket(scene, lin, {0.25, 1.0, 4.0});
    const double k = 3.0;
    std::vector<SdrImage> scaled;
    for (auto f : b.frames()) {
        f.set_exposure_time(f.exposure_time() * k);
        scaled.push_back(f);
    }
    const auto m1 = hdr::merge_brackets(b, lin);
    const auto m2 = hdr::merge_brackets(hdr::Bracket(scaled), lin);
    for (std::size_t i = 0; i < m1.radiance.size(); ++i)
        CHECK(m2.radiance.samples()[i] == doctest::Approx(m1.radiance.samples()[i] / k).epsilon(1e-6));
}

TEST_CASE("merge with the true CRF reproduces random scenes within 5% where unclipped") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto scene = test::random_radiance(32, 32, 100 + seed, -2, 1);
        for (const auto& resp : {CameraResponse::uniform(Crf::linear()), CameraResponse::uniform(Crf::power(2.2))}) {
            const auto b = hdr::simulate_bracket(scene, resp, {1.0 / 16, 1.0 / 2, 4.0});
            CHECK(worst_unclipped_error(b, hdr::merge_brackets(b, resp).radiance, scene) <= 0.05);
        }
    }
}

TEST_CASE("simulate -> recover -> merge round trip within 5%") {
    const auto scene = ramp_scene(96, 96, 7);
    for (const auto& resp : {CameraResponse::uniform(Crf::linear()), CameraResponse::uniform(Crf::power(2.2))}) {
        const auto b = hdr::simulate_bracket(scene, resp, kTimes);
        const auto fit = hdr::recover_crf(b);
        // A recovered response fixes radiance only up to a global factor.
        auto merged = hdr::merge_brackets(b, fit).radiance;
        std::vector<double> ratio;
        for (std::size_t i = 0; i < scene.size(); ++i)
            if (unclipped(b, i)) ratio.push_back(merged.samples()[i] / double(scene.samples()[i]));
        std::nth_element(ratio.begin(), ratio.begin() + ratio.size() / 2, ratio.end());
        const double k = ratio[ratio.size() / 2];
        double worst = 0;
        for (std::size_t i = 0; i < scene.size(); ++i)
            if (unclipped(b, i)) worst = std::max(worst, std::abs(merged.samples()[i] / k - scene.samples()[i]) / scene.samples()[i]);
        CHECK(worst <= 0.05);
    }
}

TEST_CASE("merge serial and parallel agree bit for bit") {
    const auto lin = CameraResponse::uniform(Crf::power(2.2));
    const auto b = hdr::simulate_bracket(test::random_radiance(40, 30, 8), lin, {0.1, 1.0, 10.0});
    const auto s = hdr::merge_brackets(b, lin, Exec::serial);
    const auto p = hdr::merge_brackets(b, lin, Exec::parallel);
    CHECK(s.radiance == p.radiance);
    CHECK(s.saturated == p.saturated);
}

TEST_CASE("isotonic projection") {
    std::vector<double> v = {3, 1, 2};
    hdr::isotonic_project(v);
    CHECK(v == std::vector<double>{2, 2, 2});
    std::vector<double> w = {0, 5, 4, 6, 1, 9};
    hdr::isotonic_project(w);
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] >= w[i - 1]);
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(25.0));
    auto again = w;
    hdr::isotonic_project(again);
    CHECK(again == w);
}

TEST_CASE("stratified samples are distinct in-range indices") {
    SdrImage f(20, 20, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i) f.samples()[i] = static_cast<std::uint8_t>((i * 37) % 256);
    const auto idx = hdr::stratified_samples(f, 50);
    CHECK(idx.size() == 50);
    std::set<std::size_t> seen(idx.begin(), idx.end());
    CHECK(seen.size() == idx.size());
    for (auto i : idx) CHECK(i < 400);
}

TEST_CASE("CRF JSON round trip") {
    const auto r = CameraResponse{{Crf::linear(), Crf::power(2.2), Crf::power(0.5)}};
    const auto back = hdr::crf_from_json(hdr::crf_to_json(r));
    for (int c = 0; c < 3; ++c)
        for (int z = 0; z < 256; ++z) CHECK(back.channel[c].g[z] == doctest::Approx(r.channel[c].g[z]).epsilon(1e-12));
    CHECK_THROWS(hdr::crf_from_json("[[1,2,3]]"));
}

}  // TEST_SUITE
