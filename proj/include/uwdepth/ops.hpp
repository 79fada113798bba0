#pragma once

#include "uwdepth/tensor.hpp"

namespace uwdepth::ad {

// Elementwise ops require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Cross-correlation of x[N,C,H,W] with w[F,C,KH,KW] and optional bias[F];
/// zero padding. Output [N,F,(H+2p-KH)/s+1,(W+2p-KW)/s+1].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int pad);

/// Adjoint of stride-s unpadded conv2d: x[N,F,h,w] and w[F,C,KH,KW] produce
/// [N,C,s*(h-1)+KH,s*(w-1)+KW]. <conv(a),b> == <a,transposed_conv(b)>.
Tensor transposed_conv2d(const Tensor& x, const Tensor& w, int stride);

/// Max pooling with window n, stride, and optional padding; padded cells are
/// ignored (window clipped to the image). Gradient routes to the argmax,
/// ties to the lowest flat input index.
Tensor maxpool2d(const Tensor& x, int n, int stride, int pad = 0);

/// Per-channel batch normalization over (N,H,W) with learned gamma/beta.
/// Training mode uses batch statistics and updates running_mean/running_var
/// in place (biased variance, update factor `momentum`); eval mode uses the
/// running statistics. running_* are plain buffers, never differentiated.
Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool training,
                 double momentum = 0.1, double eps = 1e-5);

/// Mean of |pred - target| over pixels where mask > 0.5. Throws
/// EmptyMaskError when no pixel is valid.
Tensor l1_loss(const Tensor& pred, const Tensor& target, const Tensor& mask);

/// Nearest-neighbor 2x spatial upsampling of [N,C,H,W].
Tensor upsample_nearest2(const Tensor& x);

/// Bilinear resize of [N,C,H,W] to (out_h, out_w), half-pixel centers,
/// edges clamped. Exact identity when sizes match.
Tensor resize_bilinear(const Tensor& x, int out_h, int out_w);

/// Reductions over the trailing axis (used on gathered kernel taps).
Tensor reduce_max_last(const Tensor& x);
Tensor reduce_mean_last(const Tensor& x);

}  // namespace uwdepth::ad
