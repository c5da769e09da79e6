#include <algorithm>
#include <cmath>
#include <cstdio>

#include "hdrt/kernels.hpp"
#include "hdrt/metrics.hpp"

namespace hdrt::metrics {

namespace {

void check_pair(const RadianceImage& test, const RadianceImage& ref) {
    if (!test.same_shape(ref)) throw MetricError("metrics: image dimensions differ");
    if (ref.empty()) throw MetricError("metrics: empty image");
}

std::vector<double> encode_channels(const RadianceImage& img, double scale) {
    std::vector<double> out(img.size());
    const auto s = img.samples();
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = pu21_encode(scale * s[i]);
    return out;
}

std::vector<double> encode_luminance(const RadianceImage& img, double scale) {
    std::vector<double> out(img.pixel_count());
    const float* p = img.samples().data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = pu21_encode(scale * luminance(p[3 * i], p[3 * i + 1], p[3 * i + 2]));
    return out;
}

}  // namespace

double display_scale(const RadianceImage& ref, double peak_luminance) {
    if (!(peak_luminance > 0.0)) throw MetricError("metrics: peak luminance must be > 0");
    double m = 0.0;
    for (float v : ref.samples())
        if (std::isfinite(v)) m = std::max(m, static_cast<double>(v));
    if (!(m > 0.0)) throw MetricError("metrics: reference has no positive radiance");
    return peak_luminance / m;
}

double psnr(std::span<const double> a, std::span<const double> b, double peak) {
    if (a.size() != b.size() || a.empty()) throw MetricError("psnr: size mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
    const double mse = se / static_cast<double>(a.size());
    if (mse <= 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(std::span<const double> a, std::span<const double> b, int width, int height, double dynamic_range,
            Exec exec) {
    constexpr int kWin = 11;
    if (a.size() != b.size() || a.size() != static_cast<std::size_t>(width) * height)
        throw MetricError("ssim: size mismatch");
    if (width < kWin || height < kWin) throw MetricError("ssim: image smaller than the 11x11 window");
    const auto taps = kernels::gaussian_taps(1.5, kWin / 2);
    const double c1 = std::pow(0.01 * dynamic_range, 2), c2 = std::pow(0.03 * dynamic_range, 2);

    const std::size_t n = a.size();
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    const std::size_t m = static_cast<std::size_t>(width - kWin + 1) * (height - kWin + 1);
    std::vector<double> mu_a(m), mu_b(m), s_aa(m), s_bb(m), s_ab(m);
    kernels::separable_filter_valid(a, width, height, taps, mu_a, exec);
    kernels::separable_filter_valid(b, width, height, taps, mu_b, exec);
    kernels::separable_filter_valid(aa, width, height, taps, s_aa, exec);
    kernels::separable_filter_valid(bb, width, height, taps, s_bb, exec);
    kernels::separable_filter_valid(ab, width, height, taps, s_ab, exec);

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double va = s_aa[i] - mu_a[i] * mu_a[i];
        const double vb = s_bb[i] - mu_b[i] * mu_b[i];
        const double cov = s_ab[i] - mu_a[i] * mu_b[i];
        total += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
                 ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(m);
}

double pu_psnr(const RadianceImage& test, const RadianceImage& ref, double peak_luminance) {
    check_pair(test, ref);
    const double s = display_scale(ref, peak_luminance);
    return psnr(encode_channels(test, s), encode_channels(ref, s), pu_range(peak_luminance));
}

double pu_ssim(const RadianceImage& test, const RadianceImage& ref, double peak_luminance, Exec exec) {
    check_pair(test, ref);
    const double s = display_scale(ref, peak_luminance);
    const double v = ssim(encode_luminance(test, s), encode_luminance(ref, s), ref.width(), ref.height(),
                          pu_range(peak_luminance), exec);
    return std::clamp(v, 0.0, 1.0);
}

double pu_vsi(const RadianceImage& test, const RadianceImage& ref, double peak_luminance, Exec exec) {
    check_pair(test, ref);
    const double s = display_scale(ref, peak_luminance);
    auto planes = [&](const RadianceImage& img) {
        ColorPlanes p;
        p.width = img.width();
        p.height = img.height();
        const auto enc = encode_channels(img, s);
        for (int c = 0; c < 3; ++c) {
            p.c[c].resize(img.pixel_count());
            for (std::size_t i = 0; i < img.pixel_count(); ++i) p.c[c][i] = enc[3 * i + c];
        }
        return p;
    };
    return std::clamp(vsi(planes(test), planes(ref), exec), 0.0, 1.0);
}

MetricReport evaluate(const RadianceImage& test, const RadianceImage& ref, const Mask& saturated,
                      double peak_luminance) {
    MetricReport r;
    r.pu_psnr = pu_psnr(test, ref, peak_luminance);
    r.pu_ssim = pu_ssim(test, ref, peak_luminance);
    r.pu_vsi = pu_vsi(test, ref, peak_luminance);
    r.pixel_count = ref.pixel_count();
    r.peak_luminance = peak_luminance;
    if (!saturated.empty()) {
        std::size_t k = 0;
        for (auto v : saturated.samples()) k += v != 0;
        r.saturated_fraction = static_cast<double>(k) / static_cast<double>(saturated.size());
    }
    return r;
}

std::string csv_row(const std::string& scene_id, const std::string& exposure_class, const MetricReport& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f", r.pu_psnr, r.pu_ssim, r.pu_vsi);
    return scene_id + "," + exposure_class + buf;
}

}  // namespace hdrt::metrics
