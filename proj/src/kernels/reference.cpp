#include "hdrt/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace hdrt::reference {

using kernels::ConvGeometry;

namespace {

std::size_t xi(const ConvGeometry& g, int n, int c, int y, int x) {
    return ((static_cast<std::size_t>(n) * g.in_c + c) * g.in_h + y) * g.in_w + x;
}
std::size_t yi(const ConvGeometry& g, int n, int o, int y, int x) {
    return ((static_cast<std::size_t>(n) * g.out_c + o) * g.out_h() + y) * g.out_w() + x;
}
std::size_t wi(const ConvGeometry& g, int o, int c, int i, int j) {
    return ((static_cast<std::size_t>(o) * g.in_c + c) * g.kh + i) * g.kw + j;
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* b, T* y) {
    for (int n = 0; n < g.batch; ++n)
        for (int o = 0; o < g.out_c; ++o)
            for (int oy = 0; oy < g.out_h(); ++oy)
                for (int ox = 0; ox < g.out_w(); ++ox) {
                    T acc = b ? b[o] : T(0);
                    for (int c = 0; c < g.in_c; ++c)
                        for (int i = 0; i < g.kh; ++i)
                            for (int j = 0; j < g.kw; ++j) {
                                const int iy = oy * g.stride - g.pad + i, ix = ox * g.stride - g.pad + j;
                                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                                acc += w[wi(g, o, c, i, j)] * x[xi(g, n, c, iy, ix)];
                            }
                    y[yi(g, n, o, oy, ox)] = acc;
                }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* dy, const T* w, T* dx) {
    for (int n = 0; n < g.batch; ++n)
        for (int o = 0; o < g.out_c; ++o)
            for (int oy = 0; oy < g.out_h(); ++oy)
                for (int ox = 0; ox < g.out_w(); ++ox) {
                    const T d = dy[yi(g, n, o, oy, ox)];
                    for (int c = 0; c < g.in_c; ++c)
                        for (int i = 0; i < g.kh; ++i)
                            for (int j = 0; j < g.kw; ++j) {
                                const int iy = oy * g.stride - g.pad + i, ix = ox * g.stride - g.pad + j;
                                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                                dx[xi(g, n, c, iy, ix)] += w[wi(g, o, c, i, j)] * d;
                            }
                }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* x, const T* dy, T* dw, T* db) {
    for (int n = 0; n < g.batch; ++n)
        for (int o = 0; o < g.out_c; ++o)
            for (int oy = 0; oy < g.out_h(); ++oy)
                for (int ox = 0; ox < g.out_w(); ++ox) {
                    const T d = dy[yi(g, n, o, oy, ox)];
                    if (db) db[o] += d;
                    for (int c = 0; c < g.in_c; ++c)
                        for (int i = 0; i < g.kh; ++i)
                            for (int j = 0; j < g.kw; ++j) {
                                const int iy = oy * g.stride - g.pad + i, ix = ox * g.stride - g.pad + j;
                                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                                dw[wi(g, o, c, i, j)] += x[xi(g, n, c, iy, ix)] * d;
                            }
                }
}

template void conv2d_forward<float>(const ConvGeometry&, const float*, const float*, const float*, float*);
template void conv2d_forward<double>(const ConvGeometry&, const double*, const double*, const double*, double*);
template void conv2d_backward_input<float>(const ConvGeometry&, const float*, const float*, float*);
template void conv2d_backward_input<double>(const ConvGeometry&, const double*, const double*, double*);
template void conv2d_backward_weight<float>(const ConvGeometry&, const float*, const float*, float*, float*);
template void conv2d_backward_weight<double>(const ConvGeometry&, const double*, const double*, double*, double*);

void window_filter_valid(std::span<const double> in, int width, int height, std::span<const double> taps,
                         std::span<double> out) {
    const int k = static_cast<int>(taps.size());
    const int ow = width - k + 1, oh = height - k + 1;
    if (ow <= 0 || oh <= 0) throw std::invalid_argument("window_filter_valid: image smaller than window");
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) acc += taps[i] * taps[j] * in[(y + i) * width + (x + j)];
            out[y * ow + x] = acc;
        }
}

namespace {

Plane windowed(const Plane& img, double sigma_s, double sigma_r) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma_s));
    Plane out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double center = img.at(x, y);
            double num = 0.0, den = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const int sx = x + dx, sy = y + dy;
                    if (sx < 0 || sy < 0 || sx >= img.width() || sy >= img.height()) continue;
                    const double v = img.at(sx, sy);
                    double wgt = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma_s * sigma_s));
                    if (sigma_r > 0.0) wgt *= std::exp(-0.5 * (v - center) * (v - center) / (sigma_r * sigma_r));
                    num += wgt * v;
                    den += wgt;
                }
            out.at(x, y) = static_cast<float>(num / den);
        }
    return out;
}

}  // namespace

Plane bilateral_exact(const Plane& img, double sigma_s, double sigma_r) {
    if (!(sigma_s > 0.0) || !(sigma_r > 0.0)) throw std::invalid_argument("bilateral_exact: sigmas must be > 0");
    return windowed(img, sigma_s, sigma_r);
}

Plane gaussian_blur_exact(const Plane& img, double sigma_s) {
    if (!(sigma_s > 0.0)) throw std::invalid_argument("gaussian_blur_exact: sigma must be > 0");
    return windowed(img, sigma_s, 0.0);
}

}  // namespace hdrt::reference
