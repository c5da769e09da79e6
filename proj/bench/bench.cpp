// Serial vs OpenMP timings for the hot kernels. Arg 0 = serial, 1 = parallel.
//
//   hdrt_bench --benchmark_filter=Conv

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hdrt/hdr.hpp"
#include "hdrt/kernels.hpp"
#include "hdrt/metrics.hpp"
#include "hdrt/reference.hpp"
#include "hdrt/register.hpp"
#include "hdrt/tonemap.hpp"
#include "../tests/support.hpp"

using namespace hdrt;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1, 1);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

kernels::ConvGeometry conv_geometry() {
    kernels::ConvGeometry g;
    g.batch = 4;
    g.in_c = 32;
    g.in_h = g.in_w = 32;
    g.out_c = 32;
    return g;
}

Plane log_plane(int w, int h) {
    Plane p = luminance(test::smooth_radiance(w, h, 3, -2, 3));
    for (auto& v : p.samples()) v = std::log10(v);
    return p;
}

void BM_ConvForward(benchmark::State& st) {
    const auto g = conv_geometry();
    const auto x = noise(g.in_size(), 1), w = noise(g.weight_size(), 2), b = noise(g.out_c, 3);
    std::vector<float> y(g.out_size());
    for (auto _ : st) {
        kernels::conv2d_forward(g, x.data(), w.data(), b.data(), y.data(), exec_of(st));
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_ConvForwardNaive(benchmark::State& st) {
    const auto g = conv_geometry();
    const auto x = noise(g.in_size(), 1), w = noise(g.weight_size(), 2), b = noise(g.out_c, 3);
    std::vector<float> y(g.out_size());
    for (auto _ : st) {
        reference::conv2d_forward(g, x.data(), w.data(), b.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_ConvBackwardInput(benchmark::State& st) {
    const auto g = conv_geometry();
    const auto dy = noise(g.out_size(), 4), w = noise(g.weight_size(), 2);
    std::vector<float> dx(g.in_size());
    for (auto _ : st) {
        kernels::conv2d_backward_input(g, dy.data(), w.data(), dx.data(), exec_of(st));
        benchmark::DoNotOptimize(dx.data());
    }
}

void BM_ConvBackwardWeight(benchmark::State& st) {
    const auto g = conv_geometry();
    const auto x = noise(g.in_size(), 1), dy = noise(g.out_size(), 4);
    std::vector<float> dw(g.weight_size()), db(g.out_c);
    for (auto _ : st) {
        kernels::conv2d_backward_weight(g, x.data(), dy.data(), dw.data(), db.data(), exec_of(st));
        benchmark::DoNotOptimize(dw.data());
    }
}

void BM_SeparableFilter(benchmark::State& st) {
    const int w = 512, h = 512;
    const auto in = noise(std::size_t(w) * h, 5);
    const auto taps = kernels::gaussian_taps(3.0, 9);
    std::vector<float> out(in.size());
    for (auto _ : st) {
        kernels::separable_filter_same(in, w, h, taps, out, exec_of(st));
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_BilateralGrid(benchmark::State& st) {
    const Plane p = log_plane(256, 256);
    for (auto _ : st) benchmark::DoNotOptimize(tonemap::bilateral_filter_fast(p, 0.02 * std::hypot(256, 256), 0.4, exec_of(st)));
}

void BM_BilateralExact(benchmark::State& st) {
    const Plane p = log_plane(64, 64);
    for (auto _ : st) benchmark::DoNotOptimize(reference::bilateral_exact(p, 2.0, 0.4));
}

void BM_Warp(benchmark::State& st) {
    Raster<float> img(512, 512, 1);
    auto v = noise(img.size(), 6);
    std::copy(v.begin(), v.end(), img.samples().begin());
    const reg::Homography h({1.02, 0.05, 3, -0.04, 0.98, -2, 1e-5, -2e-5, 1});
    for (auto _ : st) benchmark::DoNotOptimize(reg::warp_image(img, h, 512, 512, exec_of(st)));
}

void BM_Merge(benchmark::State& st) {
    const auto cam = hdr::CameraResponse::uniform(hdr::Crf::power(2.2));
    const auto b = hdr::simulate_bracket(test::random_radiance(256, 256, 7, -2, 1), cam, {0.125, 1.0, 8.0});
    for (auto _ : st) benchmark::DoNotOptimize(hdr::merge_brackets(b, cam, exec_of(st)));
}

void BM_Vsi(benchmark::State& st) {
    const auto ref = test::smooth_radiance(128, 128, 8, -1, 2);
    auto test_img = ref;
    for (auto& x : test_img.samples()) x *= 1.1f;
    for (auto _ : st) benchmark::DoNotOptimize(metrics::pu_vsi(test_img, ref, metrics::kDefaultPeakLuminance, exec_of(st)));
}

}  // namespace

BENCHMARK(BM_ConvForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardNaive)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardInput)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardWeight)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SeparableFilter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilateralGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilateralExact)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Warp)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Merge)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Vsi)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
