#include "hdrt/tonemap.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hdrt::tonemap {

namespace {

constexpr int kPad = 2;
// Grid cells per sigma, spatially and in range.
constexpr int kSpaceCells = 3;
constexpr int kRangeCells = 3;

struct Grid {
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> wv, w;
    std::size_t idx(int x, int y, int z) const { return (static_cast<std::size_t>(z) * ny + y) * nx + x; }
};

// Separable blur of both grid channels along one axis; zero outside the grid.
void blur_axis(Grid& g, int axis, const std::vector<double>& taps, Exec exec) {
    const int r = static_cast<int>(taps.size()) / 2;
    const int len = axis == 0 ? g.nx : axis == 1 ? g.ny : g.nz;
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(g.nx)
                                                         : static_cast<std::size_t>(g.nx) * g.ny;
    const int o1 = axis == 0 ? g.ny : g.nx;
    const int o2 = axis == 2 ? g.ny : g.nz;
    for (std::vector<double>* ch : {&g.wv, &g.w}) {
        std::vector<double>& v = *ch;
        parallel_for(exec, static_cast<std::int64_t>(o1) * o2, [&](std::int64_t line) {
            const int a = static_cast<int>(line % o1), b = static_cast<int>(line / o1);
            std::size_t base;
            if (axis == 0) base = g.idx(0, a, b);
            else if (axis == 1) base = g.idx(a, 0, b);
            else base = g.idx(a, b, 0);
            std::vector<double> tmp(static_cast<std::size_t>(len));
            for (int i = 0; i < len; ++i) {
                double acc = 0.0;
                for (int k = -r; k <= r; ++k) {
                    const int j = i + k;
                    if (j >= 0 && j < len) acc += taps[k + r] * v[base + j * stride];
                }
                tmp[i] = acc;
            }
            for (int i = 0; i < len; ++i) v[base + i * stride] = tmp[i];
        });
    }
}

}  // namespace

Plane bilateral_filter_fast(const Plane& img, double sigma_s, double sigma_r, Exec exec) {
    if (!(sigma_s > 0.0) || !(sigma_r > 0.0)) throw TonemapError("bilateral_filter_fast: sigmas must be > 0");
    if (img.channels() != 1) throw TonemapError("bilateral_filter_fast: expected a single-channel map");
    const int w = img.width(), h = img.height();
    Plane out(w, h, 1);
    if (w == 0 || h == 0) return out;
    const auto s = img.samples();
    for (float v : s)
        if (!std::isfinite(v)) throw TonemapError("bilateral_filter_fast: non-finite input");
    const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
    const double vmin = *mn, vmax = *mx;

    Grid g;
    const double cs = sigma_s / kSpaceCells, cr = sigma_r / kRangeCells;
    const int ps = kPad * kSpaceCells, pr = kPad * kRangeCells;
    g.nx = static_cast<int>((w - 1) / cs) + 2 + 2 * ps;
    g.ny = static_cast<int>((h - 1) / cs) + 2 + 2 * ps;
    g.nz = static_cast<int>((vmax - vmin) / cr) + 2 + 2 * pr;
    const std::size_t cells = static_cast<std::size_t>(g.nx) * g.ny * g.nz;
    g.wv.assign(cells, 0.0);
    g.w.assign(cells, 0.0);

    auto coords = [&](int x, int y, float v, double& gx, double& gy, double& gz) {
        gx = x / cs + ps;
        gy = y / cs + ps;
        gz = (v - vmin) / cr + pr;
    };

    // Trilinear splat, gathered per grid row so threads never share a cell.
    parallel_for(exec, g.ny, [&](std::int64_t gyi) {
        const double ylo = (gyi - 1 - ps) * cs, yhi = (gyi + 1 - ps) * cs;
        const int y0 = std::max(0, static_cast<int>(std::floor(ylo)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(yhi)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = 0; x < w; ++x) {
                const float v = img.at(x, y);
                double gx, gy, gz;
                coords(x, y, v, gx, gy, gz);
                const double fy = 1.0 - std::abs(gy - static_cast<double>(gyi));
                if (fy <= 0.0) continue;
                const int ix = static_cast<int>(gx), iz = static_cast<int>(gz);
                const double tx = gx - ix, tz = gz - iz;
                for (int dz = 0; dz < 2; ++dz)
                    for (int dx = 0; dx < 2; ++dx) {
                        const double wt = fy * (dx ? tx : 1 - tx) * (dz ? tz : 1 - tz);
                        const std::size_t k = g.idx(ix + dx, static_cast<int>(gyi), iz + dz);
                        g.wv[k] += wt * v;
                        g.w[k] += wt;
                    }
            }
        }
    });

    // Splat and slice each add a hat kernel of variance 1/6 cell^2 per axis;
    // the blur supplies the rest so the total is one sigma.
    auto blur_taps = [](double sigma_cells) {
        const double sd = std::sqrt(sigma_cells * sigma_cells - 1.0 / 3.0);
        const int r = static_cast<int>(std::ceil(2.5 * sd));
        std::vector<double> t(2 * r + 1);
        double sum = 0.0;
        for (int i = -r; i <= r; ++i) sum += t[i + r] = std::exp(-0.5 * i * i / (sd * sd));
        for (double& v : t) v /= sum;
        return t;
    };
    const auto taps_xy = blur_taps(kSpaceCells), taps_z = blur_taps(kRangeCells);
    blur_axis(g, 0, taps_xy, exec);
    blur_axis(g, 1, taps_xy, exec);
    blur_axis(g, 2, taps_z, exec);

    parallel_for(exec, h, [&](std::int64_t y) {
        for (int x = 0; x < w; ++x) {
            const float v = img.at(x, static_cast<int>(y));
            double gx, gy, gz;
            coords(x, static_cast<int>(y), v, gx, gy, gz);
            const int ix = static_cast<int>(gx), iy = static_cast<int>(gy), iz = static_cast<int>(gz);
            const double tx = gx - ix, ty = gy - iy, tz = gz - iz;
            double num = 0.0, den = 0.0;
            for (int dz = 0; dz < 2; ++dz)
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const double wt = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
                        const std::size_t k = g.idx(ix + dx, iy + dy, iz + dz);
                        num += wt * g.wv[k];
                        den += wt * g.w[k];
                    }
            out.at(x, static_cast<int>(y)) = den > 0.0 ? static_cast<float>(num / den) : v;
        }
    });
    return out;
}

double percentile(const Plane& p, double q) {
    std::vector<float> v;
    v.reserve(p.size());
    for (float s : p.samples())
        if (std::isfinite(s)) v.push_back(s);
    if (v.empty()) throw TonemapError("percentile: no finite samples");
    std::sort(v.begin(), v.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * (v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double t = pos - i;
    return i + 1 < v.size() ? v[i] * (1 - t) + v[i + 1] * t : v[i];
}

DurandResult durand(const RadianceImage& scene, const DurandParams& params, Exec exec) {
    if (scene.empty()) throw TonemapError("durand: empty image");
    if (!(params.sigma_r > 0.0) || !(params.target_contrast > 0.0) || !(params.gamma > 0.0))
        throw TonemapError("durand: invalid parameters");
    const int w = scene.width(), h = scene.height();
    Plane Y = luminance(scene);
    double ymax = 0.0;
    for (float v : Y.samples())
        if (std::isfinite(v)) ymax = std::max(ymax, static_cast<double>(v));
    if (!(ymax > 0.0)) throw TonemapError("durand: scene has no positive luminance");
    const double floor_y = ymax * 1e-8;

    DurandResult r;
    r.log_luminance = Plane(w, h, 1);
    for (std::size_t i = 0; i < Y.size(); ++i) {
        const double y = std::isfinite(Y.samples()[i]) ? std::max<double>(Y.samples()[i], floor_y) : floor_y;
        r.log_luminance.samples()[i] = static_cast<float>(std::log10(y));
    }
    const double sigma_s = params.sigma_s > 0.0 ? params.sigma_s : 0.02 * std::hypot(w, h);
    r.base = bilateral_filter_fast(r.log_luminance, std::max(sigma_s, 1e-3), params.sigma_r, exec);
    r.detail = Plane(w, h, 1);
    for (std::size_t i = 0; i < Y.size(); ++i)
        r.detail.samples()[i] = r.log_luminance.samples()[i] - r.base.samples()[i];

    const double range = percentile(r.base, 99.0) - percentile(r.base, 1.0);
    r.compression = range > 1e-9 ? params.target_contrast / range : 1.0;
    double bmax = -INFINITY;
    for (float b : r.base.samples()) bmax = std::max(bmax, r.compression * b);
    r.offset = bmax;

    r.output_log = Plane(w, h, 1);
    r.image = SdrImage(w, h, 1.0);
    const float* c = scene.samples().data();
    for (std::size_t i = 0; i < Y.size(); ++i) {
        const double ol = r.compression * r.base.samples()[i] + r.detail.samples()[i] - r.offset;
        r.output_log.samples()[i] = static_cast<float>(ol);
        const double yout = std::pow(10.0, ol);
        const double yin = std::max<double>(Y.samples()[i], floor_y);
        for (int ch = 0; ch < 3; ++ch) {
            const double ratio = std::isfinite(c[3 * i + ch]) ? std::max<double>(c[3 * i + ch], 0.0) / yin : 0.0;
            const double lin = std::clamp(std::pow(ratio, params.saturation) * yout, 0.0, 1.0);
            const double code = std::round(255.0 * std::pow(lin, 1.0 / params.gamma));
            r.image.samples()[3 * i + ch] = static_cast<std::uint8_t>(std::clamp(code, 0.0, 255.0));
        }
    }
    return r;
}

SdrImage durand_tonemap(const RadianceImage& scene, const DurandParams& params) {
    return durand(scene, params).image;
}

}  // namespace hdrt::tonemap
