#include "insitu/tensor/kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace insitu::kernels {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <class T>
std::vector<T>& scratch()
{
    thread_local std::vector<T> buf;
    return buf;
}

template <class T>
std::vector<T>& scratch2()
{
    thread_local std::vector<T> buf;
    return buf;
}

bool is_pointwise(const ConvGeometry& g)
{
    return g.kernel_volume() == 1 && g.st == 1 && g.sh == 1 && g.sw == 1 && g.pt == 0 && g.ph == 0 && g.pw == 0;
}

// Output columns [lo, hi) read inside the input row for kernel offset d.
struct Span {
    std::size_t lo, hi;
};

Span valid_span(std::size_t out_n, std::size_t in_n, std::size_t stride, std::size_t d, std::size_t pad)
{
    std::size_t lo = 0;
    while (lo < out_n && lo * stride + d < pad) ++lo;
    std::size_t hi = lo;
    while (hi < out_n && hi * stride + d < in_n + pad) ++hi;
    return {lo, hi};
}

// Rows of `cols` are (ic, dt, dy, dx); columns are output positions.
template <class T>
void im2col(const ConvGeometry& g, const T* in, T* cols)
{
    const std::size_t ot = g.out_t(), oh = g.out_h(), ow = g.out_w();
    const std::size_t npos = ot * oh * ow;
    std::size_t row = 0;
    for (std::size_t c = 0; c < g.in_c; ++c) {
        const T* src_c = in + c * g.in_t * g.in_h * g.in_w;
        for (std::size_t dt = 0; dt < g.kt; ++dt) {
            for (std::size_t dy = 0; dy < g.kh; ++dy) {
                for (std::size_t dx = 0; dx < g.kw; ++dx, ++row) {
                    T* dst = cols + row * npos;
                    const Span sx = valid_span(ow, g.in_w, g.sw, dx, g.pw);
                    for (std::size_t t = 0; t < ot; ++t) {
                        const long it = static_cast<long>(t * g.st + dt) - static_cast<long>(g.pt);
                        for (std::size_t y = 0; y < oh; ++y) {
                            T* d = dst + (t * oh + y) * ow;
                            const long iy = static_cast<long>(y * g.sh + dy) - static_cast<long>(g.ph);
                            if (it < 0 || it >= static_cast<long>(g.in_t) || iy < 0 || iy >= static_cast<long>(g.in_h)) {
                                std::fill(d, d + ow, T(0));
                                continue;
                            }
                            const T* s = src_c + (static_cast<std::size_t>(it) * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
                            std::fill(d, d + sx.lo, T(0));
                            if (g.sw == 1) {
                                std::copy(s + sx.lo + dx - g.pw, s + sx.hi + dx - g.pw, d + sx.lo);
                            } else {
                                for (std::size_t x = sx.lo; x < sx.hi; ++x) d[x] = s[x * g.sw + dx - g.pw];
                            }
                            std::fill(d + sx.hi, d + ow, T(0));
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void col2im(const ConvGeometry& g, const T* cols, T* grad_in)
{
    const std::size_t ot = g.out_t(), oh = g.out_h(), ow = g.out_w();
    const std::size_t npos = ot * oh * ow;
    std::size_t row = 0;
    for (std::size_t c = 0; c < g.in_c; ++c) {
        T* dst_c = grad_in + c * g.in_t * g.in_h * g.in_w;
        for (std::size_t dt = 0; dt < g.kt; ++dt) {
            for (std::size_t dy = 0; dy < g.kh; ++dy) {
                for (std::size_t dx = 0; dx < g.kw; ++dx, ++row) {
                    const T* src = cols + row * npos;
                    const Span sx = valid_span(ow, g.in_w, g.sw, dx, g.pw);
                    for (std::size_t t = 0; t < ot; ++t) {
                        const long it = static_cast<long>(t * g.st + dt) - static_cast<long>(g.pt);
                        if (it < 0 || it >= static_cast<long>(g.in_t)) continue;
                        for (std::size_t y = 0; y < oh; ++y) {
                            const long iy = static_cast<long>(y * g.sh + dy) - static_cast<long>(g.ph);
                            if (iy < 0 || iy >= static_cast<long>(g.in_h)) continue;
                            const T* s = src + (t * oh + y) * ow;
                            T* d = dst_c + (static_cast<std::size_t>(it) * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
                            for (std::size_t x = sx.lo; x < sx.hi; ++x) d[x * g.sw + dx - g.pw] += s[x];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

bool ConvGeometry::valid() const
{
    if (in_c == 0 || in_t == 0 || in_h == 0 || in_w == 0 || out_c == 0) return false;
    if (kt == 0 || kh == 0 || kw == 0 || st == 0 || sh == 0 || sw == 0) return false;
    return in_t + 2 * pt >= kt && in_h + 2 * ph >= kh && in_w + 2 * pw >= kw;
}

template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out)
{
    const auto npos = static_cast<Eigen::Index>(g.out_positions());
    const auto rows = static_cast<Eigen::Index>(g.in_c * g.kernel_volume());
    const auto oc = static_cast<Eigen::Index>(g.out_c);
    ConstMapMat<T> w(weight, oc, rows);
    MapMat<T> o(out, oc, npos);

    if (is_pointwise(g)) {
        o.noalias() = w * ConstMapMat<T>(in, rows, npos);
    } else {
        auto& cols = scratch<T>();
        cols.resize(static_cast<std::size_t>(rows * npos));
        im2col(g, in, cols.data());
        o.noalias() = w * ConstMapMat<T>(cols.data(), rows, npos);
    }
    if (bias) {
        for (Eigen::Index c = 0; c < oc; ++c) o.row(c).array() += bias[c];
    }
}

template <class T>
void conv_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out,
                   T* grad_in, T* grad_w, T* grad_b)
{
    const auto npos = static_cast<Eigen::Index>(g.out_positions());
    const auto rows = static_cast<Eigen::Index>(g.in_c * g.kernel_volume());
    const auto oc = static_cast<Eigen::Index>(g.out_c);
    ConstMapMat<T> go(grad_out, oc, npos);
    ConstMapMat<T> w(weight, oc, rows);

    if (grad_b) {
        for (Eigen::Index c = 0; c < oc; ++c) grad_b[c] += go.row(c).sum();
    }

    if (is_pointwise(g)) {
        ConstMapMat<T> x(in, rows, npos);
        if (grad_w) MapMat<T>(grad_w, oc, rows).noalias() += go * x.transpose();
        if (grad_in) MapMat<T>(grad_in, rows, npos).noalias() += w.transpose() * go;
        return;
    }

    if (grad_w) {
        auto& cols = scratch<T>();
        cols.resize(static_cast<std::size_t>(rows * npos));
        im2col(g, in, cols.data());
        MapMat<T>(grad_w, oc, rows).noalias() += go * ConstMapMat<T>(cols.data(), rows, npos).transpose();
    }
    if (grad_in) {
        auto& gcols = scratch2<T>();
        gcols.resize(static_cast<std::size_t>(rows * npos));
        MapMat<T>(gcols.data(), rows, npos).noalias() = w.transpose() * go;
        col2im(g, gcols.data(), grad_in);
    }
}

template <class T>
void channel_affine(const T* in, std::size_t channels, std::size_t inner, const T* scale, const T* shift, T* out)
{
    for (std::size_t c = 0; c < channels; ++c) {
        const T a = scale[c], b = shift[c];
        const T* s = in + c * inner;
        T* d = out + c * inner;
        for (std::size_t i = 0; i < inner; ++i) d[i] = a * s[i] + b;
    }
}

template <class T>
void pixel_shuffle(const T* in, std::size_t out_c, std::size_t h, std::size_t w, std::size_t r, T* out)
{
    const std::size_t ow = w * r;
    for (std::size_t c = 0; c < out_c; ++c) {
        for (std::size_t dy = 0; dy < r; ++dy) {
            for (std::size_t dx = 0; dx < r; ++dx) {
                const T* src = in + ((c * r + dy) * r + dx) * h * w;
                for (std::size_t y = 0; y < h; ++y) {
                    T* dst = out + (c * h * r + y * r + dy) * ow + dx;
                    for (std::size_t x = 0; x < w; ++x) dst[x * r] = src[y * w + x];
                }
            }
        }
    }
}

template <class T>
void pixel_unshuffle(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t r, T* out)
{
    const std::size_t iw = w * r;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t dy = 0; dy < r; ++dy) {
            for (std::size_t dx = 0; dx < r; ++dx) {
                T* dst = out + ((ch * r + dy) * r + dx) * h * w;
                for (std::size_t y = 0; y < h; ++y) {
                    const T* src = in + (ch * h * r + y * r + dy) * iw + dx;
                    for (std::size_t x = 0; x < w; ++x) dst[y * w + x] = src[x * r];
                }
            }
        }
    }
}

template <class T>
void max_pool2(const T* in, std::size_t c, std::size_t h, std::size_t w, T* out, std::size_t* argmax)
{
    const std::size_t oh = h / 2, ow = w / 2;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best = (ch * h + 2 * y) * w + 2 * x;
                const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
                for (auto i : cand) {
                    if (in[i] > in[best]) best = i;
                }
                const std::size_t o = (ch * oh + y) * ow + x;
                out[o] = in[best];
                if (argmax) argmax[o] = best;
            }
        }
    }
}

template <class T>
void upsample_nearest(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t factor, T* out)
{
    const std::size_t oh = h * factor, ow = w * factor;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            const T* s = in + (ch * h + y / factor) * w;
            T* d = out + (ch * oh + y) * ow;
            for (std::size_t x = 0; x < ow; ++x) d[x] = s[x / factor];
        }
    }
}

double cubic_weight(double distance)
{
    constexpr double a = -0.5;
    const double x = std::abs(distance);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

namespace {

struct CubicTaps {
    std::size_t index[4];
    double weight[4];
};

std::vector<CubicTaps> cubic_taps(std::size_t n, std::size_t r)
{
    std::vector<CubicTaps> taps(n * r);
    for (std::size_t o = 0; o < n * r; ++o) {
        const std::size_t base = o / r;
        const double frac = static_cast<double>(o % r) / static_cast<double>(r);
        for (int k = 0; k < 4; ++k) {
            const long idx = static_cast<long>(base) + k - 1;
            taps[o].index[k] = static_cast<std::size_t>(std::clamp(idx, 0L, static_cast<long>(n) - 1));
            taps[o].weight[k] = cubic_weight(frac - static_cast<double>(k - 1));
        }
    }
    return taps;
}

} // namespace

template <class T>
void upscale_bicubic(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t r, T* out)
{
    const auto tx = cubic_taps(w, r);
    const auto ty = cubic_taps(h, r);
    const std::size_t ow = w * r, oh = h * r;
    std::vector<double> rows(h * ow);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const T* src = in + ch * h * w;
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const auto& t = tx[x];
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.weight[k] * static_cast<double>(src[y * w + t.index[k]]);
                rows[y * ow + x] = acc;
            }
        }
        T* dst = out + ch * oh * ow;
        for (std::size_t y = 0; y < oh; ++y) {
            const auto& t = ty[y];
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += t.weight[k] * rows[t.index[k] * ow + x];
                dst[y * ow + x] = static_cast<T>(acc);
            }
        }
    }
}

template <class T>
void temporal_fusion(const T* q, const T* k, const T* v, std::size_t channels, std::size_t neighbors,
                     std::size_t ref, std::size_t hw, bool channel_dot, T* out, T* weights)
{
    const std::size_t slices = neighbors + 1;
    std::vector<T> s(neighbors);
    std::vector<T> shared; // [K, HW] similarities for channel_dot
    if (channel_dot && neighbors > 0) {
        shared.assign(neighbors * hw, T(0));
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t i = 0; i < neighbors; ++i) {
                const T* kc = k + (c * neighbors + i) * hw;
                const T* qc = q + c * hw;
                T* dst = shared.data() + i * hw;
                for (std::size_t p = 0; p < hw; ++p) dst[p] += qc[p] * kc[p];
            }
        }
    }
    for (std::size_t c = 0; c < channels; ++c) {
        const T* vref = v + (c * slices + ref) * hw;
        for (std::size_t p = 0; p < hw; ++p) {
            T acc = vref[p];
            if (neighbors > 0) {
                T mx = -std::numeric_limits<T>::infinity();
                for (std::size_t i = 0; i < neighbors; ++i) {
                    s[i] = channel_dot ? shared[i * hw + p] : q[c * hw + p] * k[(c * neighbors + i) * hw + p];
                    mx = std::max(mx, s[i]);
                }
                T z = 0;
                for (std::size_t i = 0; i < neighbors; ++i) {
                    s[i] = std::exp(s[i] - mx);
                    z += s[i];
                }
                for (std::size_t i = 0; i < neighbors; ++i) {
                    const T wgt = s[i] / z;
                    const std::size_t slice = i < ref ? i : i + 1;
                    acc += wgt * v[(c * slices + slice) * hw + p];
                    if (weights) weights[(c * neighbors + i) * hw + p] = wgt;
                }
            }
            out[c * hw + p] = acc;
        }
    }
}

#define INSITU_INSTANTIATE(T)                                                                                        \
    template void conv_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);                            \
    template void conv_backward<T>(const ConvGeometry&, const T*, const T*, const T*, T*, T*, T*);                   \
    template void channel_affine<T>(const T*, std::size_t, std::size_t, const T*, const T*, T*);                     \
    template void pixel_shuffle<T>(const T*, std::size_t, std::size_t, std::size_t, std::size_t, T*);                \
    template void pixel_unshuffle<T>(const T*, std::size_t, std::size_t, std::size_t, std::size_t, T*);              \
    template void max_pool2<T>(const T*, std::size_t, std::size_t, std::size_t, T*, std::size_t*);                   \
    template void upsample_nearest<T>(const T*, std::size_t, std::size_t, std::size_t, std::size_t, T*);             \
    template void upscale_bicubic<T>(const T*, std::size_t, std::size_t, std::size_t, std::size_t, T*);              \
    template void temporal_fusion<T>(const T*, const T*, const T*, std::size_t, std::size_t, std::size_t,            \
                                     std::size_t, bool, T*, T*);

INSITU_INSTANTIATE(float)
INSITU_INSTANTIATE(double)

#undef INSITU_INSTANTIATE

} // namespace insitu::kernels
