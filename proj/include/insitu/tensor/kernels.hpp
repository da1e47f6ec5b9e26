#pragma once

// Raw compute kernels over contiguous row-major buffers. Templated on the
// scalar so the training path (double) and the inference executor (float or
// double) share one implementation. Instantiated for float and double.

#include <cstddef>

namespace insitu::kernels {

/// Geometry of a 3-D cross-correlation over an input laid out [C, T, H, W].
/// A 2-D convolution is the T = kt = 1, pt = 0 case.
struct ConvGeometry {
    std::size_t in_c = 1, in_t = 1, in_h = 1, in_w = 1;
    std::size_t out_c = 1;
    std::size_t kt = 1, kh = 1, kw = 1;
    std::size_t st = 1, sh = 1, sw = 1;
    std::size_t pt = 0, ph = 0, pw = 0;

    std::size_t out_t() const { return (in_t + 2 * pt - kt) / st + 1; }
    std::size_t out_h() const { return (in_h + 2 * ph - kh) / sh + 1; }
    std::size_t out_w() const { return (in_w + 2 * pw - kw) / sw + 1; }
    std::size_t kernel_volume() const { return kt * kh * kw; }
    std::size_t weight_count() const { return out_c * in_c * kernel_volume(); }
    std::size_t in_count() const { return in_c * in_t * in_h * in_w; }
    std::size_t out_positions() const { return out_t() * out_h() * out_w(); }
    std::size_t out_count() const { return out_c * out_positions(); }
    bool valid() const;
};

/// out[oc, p] = bias[oc] + sum_{ic,k} w[oc, ic, k] * in[ic, p + k - pad].
/// `bias` may be null.
template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);

/// Accumulates gradients. Any of grad_in / grad_w / grad_b may be null.
template <class T>
void conv_backward(const ConvGeometry& g, const T* in, const T* weight, const T* grad_out,
                   T* grad_in, T* grad_w, T* grad_b);

/// y = scale[c] * x + shift[c] over `inner` elements per channel.
template <class T>
void channel_affine(const T* in, std::size_t channels, std::size_t inner, const T* scale, const T* shift, T* out);

/// [C*r*r, H, W] -> [C, H*r, W*r]; O(c, y*r+dy, x*r+dx) = I(c*r*r + dy*r + dx, y, x).
template <class T>
void pixel_shuffle(const T* in, std::size_t out_c, std::size_t h, std::size_t w, std::size_t r, T* out);

/// Inverse of pixel_shuffle: [C, H*r, W*r] -> [C*r*r, H, W].
template <class T>
void pixel_unshuffle(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t r, T* out);

/// 2x2, stride 2 max pooling over [C, H, W] (H, W even). `argmax` may be null;
/// when given it receives the flat input index of each selected element.
template <class T>
void max_pool2(const T* in, std::size_t c, std::size_t h, std::size_t w, T* out, std::size_t* argmax);

/// Nearest-neighbour integer upsampling over [C, H, W].
template <class T>
void upsample_nearest(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t factor, T* out);

/// Cubic convolution (a = -0.5), edge-replicate boundary, grid aligned so that
/// output sample (Y, X) sits at source coordinate (Y / r, X / r).
/// [C, H, W] -> [C, H*r, W*r].
template <class T>
void upscale_bicubic(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t r, T* out);

/// Temporal attention fusion at every (channel, position).
/// Layouts: q [C, HW]; k [C, K, HW]; v [C, K + 1, HW] with the reference
/// slice at `ref` (neighbour i of k is slice i < ref ? i : i + 1 of v).
/// out [C, HW] = v_ref + sum_i softmax_i(s_i) * v_i where s_i = q * k_i, or
/// with `channel_dot` s_i = sum_c q * k_i shared across channels.
/// `weights` (may be null) receives [C, K, HW].
template <class T>
void temporal_fusion(const T* q, const T* k, const T* v, std::size_t channels, std::size_t neighbors,
                     std::size_t ref, std::size_t hw, bool channel_dot, T* out, T* weights);

double cubic_weight(double distance);

} // namespace insitu::kernels
