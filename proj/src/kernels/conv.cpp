// im2col + GEMM convolution. The parallel path splits the batch across OpenMP
// threads; per-sample weight gradients are reduced in sample order so results
// do not depend on the thread count.

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "hdrt/kernels.hpp"

namespace hdrt::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* col) {
    const int oh = g.out_h(), ow = g.out_w();
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < g.in_c; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * g.in_h * g.in_w;
        for (int i = 0; i < g.kh; ++i) {
            for (int j = 0; j < g.kw; ++j) {
                T* row = col + (static_cast<std::size_t>(c) * g.kh * g.kw + i * g.kw + j) * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * g.stride - g.pad + i;
                    T* dst = row + static_cast<std::size_t>(oy) * ow;
                    if (iy < 0 || iy >= g.in_h) {
                        std::fill(dst, dst + ow, T(0));
                        continue;
                    }
                    const T* src = xc + static_cast<std::size_t>(iy) * g.in_w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * g.stride - g.pad + j;
                        dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* dx) {
    const int oh = g.out_h(), ow = g.out_w();
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < g.in_c; ++c) {
        T* dxc = dx + static_cast<std::size_t>(c) * g.in_h * g.in_w;
        for (int i = 0; i < g.kh; ++i) {
            for (int j = 0; j < g.kw; ++j) {
                const T* row = col + (static_cast<std::size_t>(c) * g.kh * g.kw + i * g.kw + j) * plane;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * g.stride - g.pad + i;
                    if (iy < 0 || iy >= g.in_h) continue;
                    T* dst = dxc + static_cast<std::size_t>(iy) * g.in_w;
                    const T* src = row + static_cast<std::size_t>(oy) * ow;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * g.stride - g.pad + j;
                        if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

std::size_t col_size(const ConvGeometry& g) {
    return static_cast<std::size_t>(g.in_c) * g.kh * g.kw * g.out_h() * g.out_w();
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* x, const T* w, const T* b, T* y, Exec exec) {
    const int ckk = g.in_c * g.kh * g.kw;
    const int hw = g.out_h() * g.out_w();
    const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
    const std::size_t out_stride = static_cast<std::size_t>(g.out_c) * hw;
    ConstMapMat<T> wm(w, g.out_c, ckk);
    const int threads = exec == Exec::parallel ? max_threads() : 1;
    std::vector<std::vector<T>> cols(static_cast<std::size_t>(threads), std::vector<T>(col_size(g)));
    parallel_for(exec, g.batch, [&](std::int64_t n) {
#ifdef HDRT_OPENMP
        auto& col = cols[static_cast<std::size_t>(exec == Exec::parallel ? omp_get_thread_num() : 0)];
#else
        auto& col = cols[0];
#endif
        im2col(g, x + n * in_stride, col.data());
        MapMat<T> ym(y + n * out_stride, g.out_c, hw);
        ym.noalias() = wm * ConstMapMat<T>(col.data(), ckk, hw);
        if (b)
            for (int o = 0; o < g.out_c; ++o) ym.row(o).array() += b[o];
    });
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* dy, const T* w, T* dx, Exec exec) {
    const int ckk = g.in_c * g.kh * g.kw;
    const int hw = g.out_h() * g.out_w();
    const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
    const std::size_t out_stride = static_cast<std::size_t>(g.out_c) * hw;
    ConstMapMat<T> wm(w, g.out_c, ckk);
    const int threads = exec == Exec::parallel ? max_threads() : 1;
    std::vector<std::vector<T>> cols(static_cast<std::size_t>(threads), std::vector<T>(col_size(g)));
    parallel_for(exec, g.batch, [&](std::int64_t n) {
#ifdef HDRT_OPENMP
        auto& col = cols[static_cast<std::size_t>(exec == Exec::parallel ? omp_get_thread_num() : 0)];
#else
        auto& col = cols[0];
#endif
        MapMat<T> cm(col.data(), ckk, hw);
        cm.noalias() = wm.transpose() * ConstMapMat<T>(dy + n * out_stride, g.out_c, hw);
        col2im_add(g, col.data(), dx + n * in_stride);
    });
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* x, const T* dy, T* dw, T* db, Exec exec) {
    const int ckk = g.in_c * g.kh * g.kw;
    const int hw = g.out_h() * g.out_w();
    const std::size_t in_stride = static_cast<std::size_t>(g.in_c) * g.in_h * g.in_w;
    const std::size_t out_stride = static_cast<std::size_t>(g.out_c) * hw;
    MapMat<T> dwm(dw, g.out_c, ckk);

    if (exec == Exec::serial || g.batch == 1 || max_threads() == 1) {
        std::vector<T> col(col_size(g));
        for (int n = 0; n < g.batch; ++n) {
            im2col(g, x + n * in_stride, col.data());
            ConstMapMat<T> dym(dy + n * out_stride, g.out_c, hw);
            dwm.noalias() += dym * ConstMapMat<T>(col.data(), ckk, hw).transpose();
            if (db)
                for (int o = 0; o < g.out_c; ++o) db[o] += dym.row(o).sum();
        }
        return;
    }

    const std::size_t wsize = g.weight_size();
    std::vector<T> partial(static_cast<std::size_t>(g.batch) * wsize);
    std::vector<std::vector<T>> cols(static_cast<std::size_t>(max_threads()), std::vector<T>(col_size(g)));
    parallel_for(exec, g.batch, [&](std::int64_t n) {
#ifdef HDRT_OPENMP
        auto& col = cols[static_cast<std::size_t>(omp_get_thread_num())];
#else
        auto& col = cols[0];
#endif
        im2col(g, x + n * in_stride, col.data());
        MapMat<T> pm(partial.data() + n * wsize, g.out_c, ckk);
        pm.noalias() = ConstMapMat<T>(dy + n * out_stride, g.out_c, hw) * ConstMapMat<T>(col.data(), ckk, hw).transpose();
    });
    for (int n = 0; n < g.batch; ++n) {
        const T* p = partial.data() + n * wsize;
        for (std::size_t i = 0; i < wsize; ++i) dw[i] += p[i];
        if (db) {
            ConstMapMat<T> dym(dy + n * out_stride, g.out_c, hw);
            for (int o = 0; o < g.out_c; ++o) db[o] += dym.row(o).sum();
        }
    }
}

template void conv2d_forward<float>(const ConvGeometry&, const float*, const float*, const float*, float*, Exec);
template void conv2d_forward<double>(const ConvGeometry&, const double*, const double*, const double*, double*, Exec);
template void conv2d_backward_input<float>(const ConvGeometry&, const float*, const float*, float*, Exec);
template void conv2d_backward_input<double>(const ConvGeometry&, const double*, const double*, double*, Exec);
template void conv2d_backward_weight<float>(const ConvGeometry&, const float*, const float*, float*, float*, Exec);
template void conv2d_backward_weight<double>(const ConvGeometry&, const double*, const double*, double*, double*,
                                             Exec);

}  // namespace hdrt::kernels
