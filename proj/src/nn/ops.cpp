#include "hdrt/nn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "hdrt/kernels.hpp"

namespace hdrt::nn {

namespace {

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t r, const char* op) {
    if (t.rank() != r)
        throw NnError(std::string(op) + ": expected rank " + std::to_string(r) + ", got " + shape_str(t.shape()));
}

template <typename T>
void require_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw NnError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
bool tracked(const std::shared_ptr<Node<T>>& n) {
    return n && n->requires_grad;
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b, int stride,
                      int pad) {
    require_rank(x, 4, "conv2d");
    require_rank(w, 4, "conv2d");
    if (w.dim(1) != x.dim(1))
        throw NnError("conv2d: input has " + std::to_string(x.dim(1)) + " channels, weight expects " +
                      std::to_string(w.dim(1)));
    if (b.defined() && (b.rank() != 1 || b.dim(0) != w.dim(0))) throw NnError("conv2d: bias shape mismatch");
    kernels::ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), w.dim(0), w.dim(2), w.dim(3), stride, pad};
    if (g.out_h() <= 0 || g.out_w() <= 0) throw NnError("conv2d: kernel larger than padded input");
    std::vector<T> y(g.out_size());
    kernels::conv2d_forward(g, x.data().data(), w.data().data(), b.defined() ? b.data().data() : nullptr, y.data(),
                            op_exec());
    std::vector<BasicTensor<T>> ins{x, w};
    if (b.defined()) ins.push_back(b);
    return make_result<T>({g.batch, g.out_c, g.out_h(), g.out_w()}, std::move(y), ins, [g](Node<T>& out) {
        auto& xn = out.inputs[0];
        auto& wn = out.inputs[1];
        auto* bn = out.inputs.size() > 2 ? out.inputs[2].get() : nullptr;
        if (tracked(xn))
            kernels::conv2d_backward_input(g, out.grad.data(), wn->value.data(), xn->grad_buffer().data(), op_exec());
        const bool want_b = bn && bn->requires_grad;
        if (wn->requires_grad || want_b) {
            std::vector<T> scratch;
            T* dw;
            if (wn->requires_grad) {
                dw = wn->grad_buffer().data();
            } else {
                scratch.assign(g.weight_size(), T(0));
                dw = scratch.data();
            }
            kernels::conv2d_backward_weight(g, xn->value.data(), out.grad.data(), dw,
                                            want_b ? bn->grad_buffer().data() : nullptr, op_exec());
        }
    });
}

template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b,
                                int stride, int pad) {
    require_rank(x, 4, "conv_transpose2d");
    require_rank(w, 4, "conv_transpose2d");
    if (w.dim(0) != x.dim(1)) throw NnError("conv_transpose2d: channel mismatch");
    if (b.defined() && (b.rank() != 1 || b.dim(0) != w.dim(1)))
        throw NnError("conv_transpose2d: bias shape mismatch");
    const int oh = (x.dim(2) - 1) * stride - 2 * pad + w.dim(2);
    const int ow = (x.dim(3) - 1) * stride - 2 * pad + w.dim(3);
    // Geometry of the forward convolution this op is the adjoint of.
    kernels::ConvGeometry g{x.dim(0), w.dim(1), oh, ow, w.dim(0), w.dim(2), w.dim(3), stride, pad};
    if (g.out_h() != x.dim(2) || g.out_w() != x.dim(3)) throw NnError("conv_transpose2d: inconsistent geometry");
    std::vector<T> y(g.in_size(), T(0));
    kernels::conv2d_backward_input(g, x.data().data(), w.data().data(), y.data(), op_exec());
    const int cout = g.in_c;
    const std::size_t plane = static_cast<std::size_t>(oh) * ow;
    if (b.defined())
        for (int n = 0; n < g.batch; ++n)
            for (int c = 0; c < cout; ++c) {
                T* p = y.data() + (static_cast<std::size_t>(n) * cout + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) p[i] += b.data()[c];
            }
    std::vector<BasicTensor<T>> ins{x, w};
    if (b.defined()) ins.push_back(b);
    return make_result<T>({g.batch, cout, oh, ow}, std::move(y), ins, [g, plane, cout](Node<T>& out) {
        auto& xn = out.inputs[0];
        auto& wn = out.inputs[1];
        auto* bn = out.inputs.size() > 2 ? out.inputs[2].get() : nullptr;
        if (tracked(xn)) {
            std::vector<T> tmp(xn->value.size());
            kernels::conv2d_forward(g, out.grad.data(), wn->value.data(), static_cast<const T*>(nullptr), tmp.data(),
                                    op_exec());
            auto& dx = xn->grad_buffer();
            for (std::size_t i = 0; i < tmp.size(); ++i) dx[i] += tmp[i];
        }
        if (wn->requires_grad)
            kernels::conv2d_backward_weight(g, out.grad.data(), xn->value.data(), wn->grad_buffer().data(),
                                            static_cast<T*>(nullptr), op_exec());
        if (bn && bn->requires_grad) {
            auto& db = bn->grad_buffer();
            for (int n = 0; n < g.batch; ++n)
                for (int c = 0; c < cout; ++c) {
                    const T* p = out.grad.data() + (static_cast<std::size_t>(n) * cout + c) * plane;
                    T s = 0;
                    for (std::size_t i = 0; i < plane; ++i) s += p[i];
                    db[c] += s;
                }
        }
    });
}

template <typename T>
BasicTensor<T> maxpool2x2(const BasicTensor<T>& x) {
    require_rank(x, 4, "maxpool2x2");
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (h % 2 || w % 2) throw NnError("maxpool2x2: spatial size must be even, got " + shape_str(x.shape()));
    const int oh = h / 2, ow = w / 2;
    std::vector<T> y(static_cast<std::size_t>(n) * c * oh * ow);
    std::vector<std::size_t> arg(y.size());
    const T* xv = x.data().data();
    for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                std::size_t best = (p * h + 2 * i) * w + 2 * j;
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj) {
                        const std::size_t k = (p * h + 2 * i + di) * w + 2 * j + dj;
                        if (xv[k] > xv[best]) best = k;
                    }
                const std::size_t o = (p * oh + i) * ow + j;
                y[o] = xv[best];
                arg[o] = best;
            }
    return make_result<T>({n, c, oh, ow}, std::move(y), {x}, [arg = std::move(arg)](Node<T>& out) {
        auto& dx = out.inputs[0]->grad_buffer();
        for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += out.grad[o];
    });
}

template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                         std::vector<T>* running_mean, std::vector<T>* running_var, bool training, double momentum,
                         double eps) {
    require_rank(x, 4, "batchnorm");
    const int n = x.dim(0), c = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    const std::size_t m = plane * n;
    if (gamma.size() != static_cast<std::size_t>(c) || beta.size() != static_cast<std::size_t>(c))
        throw NnError("batchnorm: parameter size does not match channel count");
    if (!training && (!running_mean || !running_var)) throw NnError("batchnorm: eval mode needs running stats");
    if (training && m < 2) throw NnError("batchnorm: training needs more than one value per channel");

    const T* xv = x.data().data();
    std::vector<T> mu(c), inv_std(c);
    for (int ch = 0; ch < c; ++ch) {
        if (training) {
            double s = 0.0, ss = 0.0;
            for (int b = 0; b < n; ++b) {
                const T* p = xv + (static_cast<std::size_t>(b) * c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) s += p[i];
            }
            const double mean = s / m;
            for (int b = 0; b < n; ++b) {
                const T* p = xv + (static_cast<std::size_t>(b) * c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) ss += (p[i] - mean) * (p[i] - mean);
            }
            const double var = ss / m;
            mu[ch] = static_cast<T>(mean);
            inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + eps));
            if (running_mean && running_var) {
                (*running_mean)[ch] = static_cast<T>((1 - momentum) * (*running_mean)[ch] + momentum * mean);
                (*running_var)[ch] =
                    static_cast<T>((1 - momentum) * (*running_var)[ch] + momentum * var * m / (m - 1));
            }
        } else {
            mu[ch] = (*running_mean)[ch];
            inv_std[ch] = static_cast<T>(1.0 / std::sqrt(static_cast<double>((*running_var)[ch]) + eps));
        }
    }
    std::vector<T> xhat(x.size()), y(x.size());
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch) {
            const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
                xhat[off + i] = (xv[off + i] - mu[ch]) * inv_std[ch];
                y[off + i] = gamma.data()[ch] * xhat[off + i] + beta.data()[ch];
            }
        }
    return make_result<T>(x.shape(), std::move(y), {x, gamma, beta},
                          [xhat = std::move(xhat), inv_std, n, c, plane, m, training](Node<T>& out) {
                              auto& xn = out.inputs[0];
                              auto& gn = out.inputs[1];
                              auto& bn = out.inputs[2];
                              const T* dy = out.grad.data();
                              for (int ch = 0; ch < c; ++ch) {
                                  T sdy = 0, sdyx = 0;
                                  for (int b = 0; b < n; ++b) {
                                      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
                                      for (std::size_t i = 0; i < plane; ++i) {
                                          sdy += dy[off + i];
                                          sdyx += dy[off + i] * xhat[off + i];
                                      }
                                  }
                                  if (gn->requires_grad) gn->grad_buffer()[ch] += sdyx;
                                  if (bn->requires_grad) bn->grad_buffer()[ch] += sdy;
                                  if (!xn->requires_grad) continue;
                                  auto& dx = xn->grad_buffer();
                                  const T g = gn->value[ch] * inv_std[ch];
                                  for (int b = 0; b < n; ++b) {
                                      const std::size_t off = (static_cast<std::size_t>(b) * c + ch) * plane;
                                      for (std::size_t i = 0; i < plane; ++i) {
                                          if (training)
                                              dx[off + i] += g * (dy[off + i] - sdy / static_cast<T>(m) -
                                                                  xhat[off + i] * sdyx / static_cast<T>(m));
                                          else
                                              dx[off + i] += g * dy[off + i];
                                      }
                                  }
                              }
                          });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(x.data()[i], T(0));
    return make_result<T>(x.shape(), std::move(y), {x}, [](Node<T>& out) {
        auto& in = *out.inputs[0];
        auto& dx = in.grad_buffer();
        for (std::size_t i = 0; i < dx.size(); ++i)
            if (in.value[i] > T(0)) dx[i] += out.grad[i];
    });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
    std::vector<T> y(x.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-x.data()[i]));
    return make_result<T>(x.shape(), std::move(y), {x}, [](Node<T>& out) {
        auto& dx = out.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += out.grad[i] * out.value[i] * (T(1) - out.value[i]);
    });
}

template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& xs) {
    if (xs.empty()) throw NnError("concat_channels: no inputs");
    for (const auto& t : xs) require_rank(t, 4, "concat_channels");
    const int n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
    int c = 0;
    std::vector<int> chans;
    for (const auto& t : xs) {
        if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w)
            throw NnError("concat_channels: mismatch " + shape_str(xs[0].shape()) + " vs " + shape_str(t.shape()));
        chans.push_back(t.dim(1));
        c += t.dim(1);
    }
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<T> y(static_cast<std::size_t>(n) * c * plane);
    for (int b = 0; b < n; ++b) {
        std::size_t dst = static_cast<std::size_t>(b) * c * plane;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const std::size_t len = chans[k] * plane;
            std::copy_n(xs[k].data().data() + b * len, len, y.data() + dst);
            dst += len;
        }
    }
    return make_result<T>({n, c, h, w}, std::move(y), xs, [chans, n, c, plane](Node<T>& out) {
        for (int b = 0; b < n; ++b) {
            std::size_t src = static_cast<std::size_t>(b) * c * plane;
            for (std::size_t k = 0; k < chans.size(); ++k) {
                const std::size_t len = chans[k] * plane;
                auto& in = *out.inputs[k];
                if (in.requires_grad) {
                    auto& dx = in.grad_buffer();
                    for (std::size_t i = 0; i < len; ++i) dx[b * len + i] += out.grad[src + i];
                }
                src += len;
            }
        }
    });
}

template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
    require_rank(x, 2, "linear");
    require_rank(w, 2, "linear");
    const int n = x.dim(0), in = x.dim(1), out_f = w.dim(0);
    if (w.dim(1) != in) throw NnError("linear: feature mismatch");
    if (b.defined() && b.size() != static_cast<std::size_t>(out_f)) throw NnError("linear: bias size mismatch");
    std::vector<T> y(static_cast<std::size_t>(n) * out_f);
    for (int i = 0; i < n; ++i)
        for (int o = 0; o < out_f; ++o) {
            T acc = b.defined() ? b.data()[o] : T(0);
            for (int k = 0; k < in; ++k) acc += x.data()[i * in + k] * w.data()[o * in + k];
            y[i * out_f + o] = acc;
        }
    std::vector<BasicTensor<T>> ins{x, w};
    if (b.defined()) ins.push_back(b);
    return make_result<T>({n, out_f}, std::move(y), ins, [n, in, out_f](Node<T>& out) {
        auto& xn = *out.inputs[0];
        auto& wn = *out.inputs[1];
        for (int i = 0; i < n; ++i)
            for (int o = 0; o < out_f; ++o) {
                const T g = out.grad[i * out_f + o];
                if (xn.requires_grad) {
                    auto& dx = xn.grad_buffer();
                    for (int k = 0; k < in; ++k) dx[i * in + k] += g * wn.value[o * in + k];
                }
                if (wn.requires_grad) {
                    auto& dw = wn.grad_buffer();
                    for (int k = 0; k < in; ++k) dw[o * in + k] += g * xn.value[i * in + k];
                }
                if (out.inputs.size() > 2 && out.inputs[2]->requires_grad) out.inputs[2]->grad_buffer()[o] += g;
            }
    });
}

template <typename T>
BasicTensor<T> l1_mean(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same(a, b, "l1_mean");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
    const T m = static_cast<T>(a.size());
    return make_result<T>({1}, {static_cast<T>(s / a.size())}, {a, b}, [m](Node<T>& out) {
        auto& an = *out.inputs[0];
        auto& bn = *out.inputs[1];
        const T g = out.grad[0] / m;
        for (std::size_t i = 0; i < an.value.size(); ++i) {
            const T d = an.value[i] - bn.value[i];
            const T sg = d > 0 ? g : d < 0 ? -g : T(0);
            if (an.requires_grad) an.grad_buffer()[i] += sg;
            if (bn.requires_grad) bn.grad_buffer()[i] -= sg;
        }
    });
}

template <typename T>
BasicTensor<T> cosine_sim(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same(a, b, "cosine_sim");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<double>(a.data()[i]) * b.data()[i];
        aa += static_cast<double>(a.data()[i]) * a.data()[i];
        bb += static_cast<double>(b.data()[i]) * b.data()[i];
    }
    if (!(aa > 0.0) || !(bb > 0.0)) throw NnError("cosine_sim: zero-norm input");
    const double na = std::sqrt(aa), nb = std::sqrt(bb), cs = ab / (na * nb);
    return make_result<T>({1}, {static_cast<T>(cs)}, {a, b}, [na, nb, cs](Node<T>& out) {
        auto& an = *out.inputs[0];
        auto& bn = *out.inputs[1];
        const double g = out.grad[0];
        for (std::size_t i = 0; i < an.value.size(); ++i) {
            if (an.requires_grad)
                an.grad_buffer()[i] += static_cast<T>(g * (bn.value[i] / (na * nb) - cs * an.value[i] / (na * na)));
            if (bn.requires_grad)
                bn.grad_buffer()[i] += static_cast<T>(g * (an.value[i] / (na * nb) - cs * bn.value[i] / (nb * nb)));
        }
    });
}

template <typename T>
BasicTensor<T> bce(const BasicTensor<T>& p, T target) {
    const double eps = sizeof(T) == 4 ? 1e-6 : 1e-12;
    double s = 0.0;
    for (T v : p.data()) {
        const double q = std::clamp(static_cast<double>(v), eps, 1.0 - eps);
        s -= target * std::log(q) + (1.0 - target) * std::log(1.0 - q);
    }
    const double m = static_cast<double>(p.size());
    return make_result<T>({1}, {static_cast<T>(s / m)}, {p}, [eps, m, target](Node<T>& out) {
        auto& pn = *out.inputs[0];
        auto& dp = pn.grad_buffer();
        const double g = out.grad[0] / m;
        for (std::size_t i = 0; i < dp.size(); ++i) {
            const double q = std::clamp(static_cast<double>(pn.value[i]), eps, 1.0 - eps);
            dp[i] += static_cast<T>(g * (-target / q + (1.0 - target) / (1.0 - q)));
        }
    });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same(a, b, "add");
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + b.data()[i];
    return make_result<T>(a.shape(), std::move(y), {a, b}, [](Node<T>& out) {
        for (int k = 0; k < 2; ++k) {
            auto& in = *out.inputs[k];
            if (!in.requires_grad) continue;
            auto& d = in.grad_buffer();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += out.grad[i];
        }
    });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    return add(a, scale(b, T(-1)));
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s) {
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] * s;
    return make_result<T>(a.shape(), std::move(y), {a}, [s](Node<T>& out) {
        auto& d = out.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += out.grad[i] * s;
    });
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T s) {
    std::vector<T> y(a.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.data()[i] + s;
    return make_result<T>(a.shape(), std::move(y), {a}, [](Node<T>& out) {
        auto& d = out.inputs[0]->grad_buffer();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += out.grad[i];
    });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
    double s = 0.0;
    for (T v : a.data()) s += v;
    return make_result<T>({1}, {static_cast<T>(s)}, {a}, [](Node<T>& out) {
        auto& d = out.inputs[0]->grad_buffer();
        for (auto& v : d) v += out.grad[0];
    });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
    if (a.size() == 0) throw NnError("mean: empty tensor");
    return scale(sum(a), T(1) / static_cast<T>(a.size()));
}

#define HDRT_NN_INSTANTIATE(T)                                                                                    \
    template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, int, int); \
    template BasicTensor<T> conv_transpose2d(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                             int, int);                                                            \
    template BasicTensor<T> maxpool2x2(const BasicTensor<T>&);                                                     \
    template BasicTensor<T> batchnorm(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,        \
                                      std::vector<T>*, std::vector<T>*, bool, double, double);                     \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                                           \
    template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                                        \
    template BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>&);                                   \
    template BasicTensor<T> linear(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);           \
    template BasicTensor<T> l1_mean(const BasicTensor<T>&, const BasicTensor<T>&);                                 \
    template BasicTensor<T> cosine_sim(const BasicTensor<T>&, const BasicTensor<T>&);                              \
    template BasicTensor<T> bce(const BasicTensor<T>&, T);                                                         \
    template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                     \
    template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                                     \
    template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                       \
    template BasicTensor<T> add_scalar(const BasicTensor<T>&, T);                                                  \
    template BasicTensor<T> sum(const BasicTensor<T>&);                                                            \
    template BasicTensor<T> mean(const BasicTensor<T>&);

HDRT_NN_INSTANTIATE(float)
HDRT_NN_INSTANTIATE(double)

}  // namespace hdrt::nn
