// Visual saliency-induced index with SDSP saliency.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>

#include "hdrt/metrics.hpp"

namespace hdrt::metrics {

namespace {

constexpr double kConstVS = 1.27;
constexpr double kConstGM = 386.0;
constexpr double kConstChrom = 130.0;
constexpr double kAlpha = 0.40;
constexpr double kLambda = 0.020;
constexpr double kSigmaF = 1.34;
constexpr double kOmega0 = 0.021;
constexpr double kSigmaD = 145.0;
constexpr double kSigmaC = 0.001;
constexpr int kSaliencySize = 256;

// FFTW's planner is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

void fft2(std::vector<std::complex<double>>& data, int rows, int cols, int sign) {
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_mutex());
        plan = fftw_plan_dft_2d(rows, cols, p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(plan);
}

// Bilinear resize with pixel-centre alignment and edge clamping.
std::vector<double> resize_bilinear(const std::vector<double>& in, int ih, int iw, int oh, int ow) {
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    const double sy = static_cast<double>(ih) / oh, sx = static_cast<double>(iw) / ow;
    for (int y = 0; y < oh; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, ih - 1.0);
        const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, ih - 1);
        const double wy = fy - y0;
        for (int x = 0; x < ow; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, iw - 1.0);
            const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, iw - 1);
            const double wx = fx - x0;
            const double top = in[y0 * iw + x0] * (1 - wx) + in[y0 * iw + x1] * wx;
            const double bot = in[y1 * iw + x0] * (1 - wx) + in[y1 * iw + x1] * wx;
            out[static_cast<std::size_t>(y) * ow + x] = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

void rgb_to_lab(double r, double g, double b, double& L, double& A, double& B) {
    auto lin = [](double v) {
        v /= 255.0;
        return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
    };
    const double R = lin(r), G = lin(g), Bl = lin(b);
    const double X = R * 0.4124564 + G * 0.3575761 + Bl * 0.1804375;
    const double Y = R * 0.2126729 + G * 0.7151522 + Bl * 0.0721750;
    const double Z = R * 0.0193339 + G * 0.1191920 + Bl * 0.9503041;
    constexpr double eps = 0.008856, kappa = 903.3;
    auto f = [&](double t) { return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0; };
    const double fx = f(X / 0.9642), fy = f(Y / 1.0), fz = f(Z / 0.8251);
    L = 116.0 * fy - 16.0;
    A = 500.0 * (fx - fy);
    B = 200.0 * (fy - fz);
}

// Log-Gabor transfer function in unshifted FFT order.
std::vector<double> log_gabor(int rows, int cols) {
    std::vector<double> lg(static_cast<std::size_t>(rows) * cols);
    auto freq = [](int k, int n) {
        const int f = k < (n + 1) / 2 ? k : k - n;
        return static_cast<double>(f) / (n - n % 2);
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double u2 = freq(r, rows), u1 = freq(c, cols);
            double rad = std::sqrt(u1 * u1 + u2 * u2);
            if (u1 * u1 + u2 * u2 > 0.25) rad = 0.0;
            double v = 0.0;
            if (rad > 0.0) v = std::exp(-std::pow(std::log(rad / kOmega0), 2) / (2.0 * kSigmaF * kSigmaF));
            lg[static_cast<std::size_t>(r) * cols + c] = v;
        }
    lg[0] = 0.0;
    return lg;
}

void mat2gray(std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, b = *hi;
    if (!(b > a)) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    for (double& x : v) x = (x - a) / (b - a);
}

// MATLAB conv2(in, k, 'same') with zero padding.
std::vector<double> conv2_same(const std::vector<double>& in, int h, int w, const std::vector<double>& k, int kh,
                               int kw, Exec exec) {
    std::vector<double> out(in.size());
    const int oy = kh / 2, ox = kw / 2;
    parallel_for(exec, h, [&](std::int64_t y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kh; ++i) {
                const int sy = static_cast<int>(y) + oy - i;
                if (sy < 0 || sy >= h) continue;
                for (int j = 0; j < kw; ++j) {
                    const int sx = x + ox - j;
                    if (sx < 0 || sx >= w) continue;
                    acc += in[static_cast<std::size_t>(sy) * w + sx] * k[static_cast<std::size_t>(i) * kw + j];
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    });
    return out;
}

std::vector<double> downsample(const std::vector<double>& in, int h, int w, int f, Exec exec) {
    if (f == 1) return in;
    const std::vector<double> k(static_cast<std::size_t>(f) * f, 1.0 / (f * f));
    const auto blurred = conv2_same(in, h, w, k, f, f, exec);
    std::vector<double> out;
    for (int y = 0; y < h; y += f)
        for (int x = 0; x < w; x += f) out.push_back(blurred[static_cast<std::size_t>(y) * w + x]);
    return out;
}

std::vector<double> gradient_magnitude(const std::vector<double>& L, int h, int w, Exec exec) {
    const std::vector<double> dx = {3 / 16.0, 0, -3 / 16.0, 10 / 16.0, 0, -10 / 16.0, 3 / 16.0, 0, -3 / 16.0};
    const std::vector<double> dy = {3 / 16.0, 10 / 16.0, 3 / 16.0, 0, 0, 0, -3 / 16.0, -10 / 16.0, -3 / 16.0};
    const auto gx = conv2_same(L, h, w, dx, 3, 3, exec);
    const auto gy = conv2_same(L, h, w, dy, 3, 3, exec);
    std::vector<double> g(L.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
    return g;
}

}  // namespace

std::vector<double> sdsp_saliency(const ColorPlanes& img) {
    const int n = kSaliencySize;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    std::array<std::vector<double>, 3> ds;
    for (int c = 0; c < 3; ++c) ds[c] = resize_bilinear(img.c[c], img.height, img.width, n, n);

    std::array<std::vector<double>, 3> lab;
    for (auto& v : lab) v.resize(nn);
    for (std::size_t i = 0; i < nn; ++i) rgb_to_lab(ds[0][i], ds[1][i], ds[2][i], lab[0][i], lab[1][i], lab[2][i]);

    const auto lg = log_gabor(n, n);
    std::vector<double> sf(nn, 0.0);
    std::vector<std::complex<double>> buf(nn);
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < nn; ++i) buf[i] = lab[c][i];
        fft2(buf, n, n, FFTW_FORWARD);
        for (std::size_t i = 0; i < nn; ++i) buf[i] *= lg[i];
        fft2(buf, n, n, FFTW_BACKWARD);
        for (std::size_t i = 0; i < nn; ++i) {
            const double re = buf[i].real() / static_cast<double>(nn);
            sf[i] += re * re;
        }
    }

    auto normalize = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        std::vector<double> out(v.size(), 0.0);
        if (*hi > *lo)
            for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / (*hi - *lo);
        return out;
    };
    const auto na = normalize(lab[1]), nb = normalize(lab[2]);

    std::vector<double> vs(nn);
    const double cy = n / 2.0, cx = n / 2.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * n + x;
            const double dy = (y + 1) - cy, dx = (x + 1) - cx;
            const double sd = std::exp(-(dx * dx + dy * dy) / (kSigmaD * kSigmaD));
            const double sc = 1.0 - std::exp(-(na[i] * na[i] + nb[i] * nb[i]) / (kSigmaC * kSigmaC));
            vs[i] = std::sqrt(sf[i]) * sd * sc;
        }
    auto out = resize_bilinear(vs, n, n, img.height, img.width);
    mat2gray(out);
    return out;
}

double vsi(const ColorPlanes& a, const ColorPlanes& b, Exec exec) {
    if (a.width != b.width || a.height != b.height) throw MetricError("vsi: image dimensions differ");
    const int h = a.height, w = a.width;
    if (h <= 0 || w <= 0) throw MetricError("vsi: empty image");

    auto vs1 = sdsp_saliency(a), vs2 = sdsp_saliency(b);
    auto lmn = [](const ColorPlanes& p) {
        std::array<std::vector<double>, 3> o;
        for (auto& v : o) v.resize(p.c[0].size());
        for (std::size_t i = 0; i < o[0].size(); ++i) {
            const double R = p.c[0][i], G = p.c[1][i], B = p.c[2][i];
            o[0][i] = 0.06 * R + 0.63 * G + 0.27 * B;
            o[1][i] = 0.30 * R + 0.04 * G - 0.35 * B;
            o[2][i] = 0.34 * R - 0.60 * G + 0.17 * B;
        }
        return o;
    };
    auto c1 = lmn(a), c2 = lmn(b);

    const int f = std::max(1, static_cast<int>(std::lround(std::min(h, w) / 256.0)));
    for (int c = 0; c < 3; ++c) {
        c1[c] = downsample(c1[c], h, w, f, exec);
        c2[c] = downsample(c2[c], h, w, f, exec);
    }
    vs1 = downsample(vs1, h, w, f, exec);
    vs2 = downsample(vs2, h, w, f, exec);
    const int dh = (h + f - 1) / f, dw = (w + f - 1) / f;

    const auto g1 = gradient_magnitude(c1[0], dh, dw, exec);
    const auto g2 = gradient_magnitude(c2[0], dh, dw, exec);

    double num = 0.0, den = 0.0;
    const std::size_t m = g1.size();
    std::vector<double> sims(m), weights(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double svs = (2 * vs1[i] * vs2[i] + kConstVS) / (vs1[i] * vs1[i] + vs2[i] * vs2[i] + kConstVS);
        const double sgm = (2 * g1[i] * g2[i] + kConstGM) / (g1[i] * g1[i] + g2[i] * g2[i] + kConstGM);
        const double si = (2 * c1[1][i] * c2[1][i] + kConstChrom) /
                          (c1[1][i] * c1[1][i] + c2[1][i] * c2[1][i] + kConstChrom);
        const double sq = (2 * c1[2][i] * c2[2][i] + kConstChrom) /
                          (c1[2][i] * c1[2][i] + c2[2][i] * c2[2][i] + kConstChrom);
        // Real part of a possibly negative base raised to lambda.
        const double iq = si * sq;
        const double chrom = iq >= 0 ? std::pow(iq, kLambda) : std::pow(-iq, kLambda) * std::cos(M_PI * kLambda);
        sims[i] = std::pow(sgm, kAlpha) * svs * chrom;
        weights[i] = std::max(vs1[i], vs2[i]);
        den += weights[i];
    }
    if (!(den > 0.0)) {
        // Both saliency maps flat: fall back to uniform pooling.
        std::fill(weights.begin(), weights.end(), 1.0);
        den = static_cast<double>(m);
    }
    for (std::size_t i = 0; i < m; ++i) num += sims[i] * weights[i];
    return num / den;
}

}  // namespace hdrt::metrics
