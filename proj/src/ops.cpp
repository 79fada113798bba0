#include "uwdepth/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace uwdepth::ad {

using detail::TensorImpl;
using detail::make_op;
using Eigen::ArrayXd;
using Eigen::MatrixXd;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void check_rank4(const Tensor& t, const char* op) {
  if (t.rank() != 4)
    throw ShapeError(std::string(op) + ": expected rank-4 tensor, got " +
                     shape_str(t.shape()));
}

struct ConvDims {
  long N, C, H, W, F, KH, KW, OH, OW;
};

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad,
                   const char* op) {
  check_rank4(x, op);
  check_rank4(w, op);
  ConvDims d;
  d.N = x.dim(0);
  d.C = x.dim(1);
  d.H = x.dim(2);
  d.W = x.dim(3);
  d.F = w.dim(0);
  d.KH = w.dim(2);
  d.KW = w.dim(3);
  if (w.dim(1) != d.C)
    throw ShapeError(std::string(op) + ": weight channels " +
                     std::to_string(w.dim(1)) + " vs input channels " +
                     std::to_string(d.C));
  d.OH = (d.H + 2 * pad - d.KH) / stride + 1;
  d.OW = (d.W + 2 * pad - d.KW) / stride + 1;
  if (d.H + 2 * pad < d.KH || d.W + 2 * pad < d.KW || d.OH < 1 || d.OW < 1)
    throw ShapeError(std::string(op) + ": kernel larger than padded input");
  return d;
}

// Patch matrix: (C*KH*KW) x (N*OH*OW), zero-filled outside the image.
MatrixXd im2col(const ArrayXd& x, const ConvDims& d, int stride, int pad) {
  MatrixXd cols = MatrixXd::Zero(d.C * d.KH * d.KW, d.N * d.OH * d.OW);
  for (long n = 0; n < d.N; ++n)
    for (long oy = 0; oy < d.OH; ++oy)
      for (long ox = 0; ox < d.OW; ++ox) {
        long col = (n * d.OH + oy) * d.OW + ox;
        double* dst = cols.col(col).data();
        for (long c = 0; c < d.C; ++c) {
          const double* plane = x.data() + (n * d.C + c) * d.H * d.W;
          for (long kr = 0; kr < d.KH; ++kr) {
            long iy = oy * stride + kr - pad;
            for (long kc = 0; kc < d.KW; ++kc) {
              long ix = ox * stride + kc - pad;
              if (iy >= 0 && iy < d.H && ix >= 0 && ix < d.W)
                *dst = plane[iy * d.W + ix];
              ++dst;
            }
          }
        }
      }
  return cols;
}

// Adjoint of im2col: scatter-add patch columns back into the image.
void col2im_add(const MatrixXd& cols, const ConvDims& d, int stride, int pad,
                ArrayXd& gx) {
  for (long n = 0; n < d.N; ++n)
    for (long oy = 0; oy < d.OH; ++oy)
      for (long ox = 0; ox < d.OW; ++ox) {
        long col = (n * d.OH + oy) * d.OW + ox;
        const double* src = cols.col(col).data();
        for (long c = 0; c < d.C; ++c) {
          double* plane = gx.data() + (n * d.C + c) * d.H * d.W;
          for (long kr = 0; kr < d.KH; ++kr) {
            long iy = oy * stride + kr - pad;
            for (long kc = 0; kc < d.KW; ++kc) {
              long ix = ox * stride + kc - pad;
              if (iy >= 0 && iy < d.H && ix >= 0 && ix < d.W)
                plane[iy * d.W + ix] += *src;
              ++src;
            }
          }
        }
      }
}

// [N,F,OH,OW] flat <-> (F x N*OH*OW) matrix.
MatrixXd to_filter_matrix(const ArrayXd& y, long N, long F, long P) {
  MatrixXd m(F, N * P);
  for (long n = 0; n < N; ++n)
    for (long f = 0; f < F; ++f)
      m.row(f).segment(n * P, P) =
          Eigen::Map<const Eigen::RowVectorXd>(y.data() + (n * F + f) * P, P);
  return m;
}

ArrayXd from_filter_matrix(const MatrixXd& m, long N, long F, long P) {
  ArrayXd y(N * F * P);
  for (long n = 0; n < N; ++n)
    for (long f = 0; f < F; ++f)
      Eigen::Map<Eigen::RowVectorXd>(y.data() + (n * F + f) * P, P) =
          m.row(f).segment(n * P, P);
  return y;
}

// Per-output-axis bilinear taps with half-pixel centers.
struct AxisTap {
  long i0, i1;
  double f;  // weight of i1
};

std::vector<AxisTap> resize_taps(long in, long out) {
  std::vector<AxisTap> taps(static_cast<size_t>(out));
  double scale = static_cast<double>(in) / out;
  for (long o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    long i0 = static_cast<long>(std::floor(src));
    taps[o] = {i0, std::min(i0 + 1, in - 1), src - i0};
  }
  return taps;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto ai = a.impl(), bi = b.impl();
  return make_op(a.shape(), a.values() + b.values(), {a, b},
                 [ai, bi](const TensorImpl& out) {
                   if (ai->requires_grad) ai->accum_grad(out.grad);
                   if (bi->requires_grad) bi->accum_grad(out.grad);
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto ai = a.impl(), bi = b.impl();
  return make_op(a.shape(), a.values() - b.values(), {a, b},
                 [ai, bi](const TensorImpl& out) {
                   if (ai->requires_grad) ai->accum_grad(out.grad);
                   if (bi->requires_grad) bi->accum_grad(-out.grad);
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto ai = a.impl(), bi = b.impl();
  return make_op(a.shape(), a.values() * b.values(), {a, b},
                 [ai, bi](const TensorImpl& out) {
                   if (ai->requires_grad) ai->accum_grad(out.grad * bi->val);
                   if (bi->requires_grad) bi->accum_grad(out.grad * ai->val);
                 });
}

Tensor mul_scalar(const Tensor& a, double s) {
  auto ai = a.impl();
  return make_op(a.shape(), a.values() * s, {a},
                 [ai, s](const TensorImpl& out) {
                   if (ai->requires_grad) ai->accum_grad(out.grad * s);
                 });
}

Tensor relu(const Tensor& a) {
  auto ai = a.impl();
  return make_op(a.shape(), a.values().max(0.0), {a},
                 [ai](const TensorImpl& out) {
                   if (!ai->requires_grad) return;
                   ai->accum_grad(out.grad * (ai->val > 0.0).cast<double>());
                 });
}

Tensor sum(const Tensor& a) {
  auto ai = a.impl();
  ArrayXd v(1);
  v[0] = a.values().sum();
  return make_op({1}, std::move(v), {a}, [ai](const TensorImpl& out) {
    if (ai->requires_grad)
      ai->grad_buffer() += out.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  auto ai = a.impl();
  double inv = 1.0 / static_cast<double>(a.size());
  ArrayXd v(1);
  v[0] = a.values().mean();
  return make_op({1}, std::move(v), {a}, [ai, inv](const TensorImpl& out) {
    if (ai->requires_grad)
      ai->grad_buffer() += out.grad[0] * inv;
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int pad) {
  ConvDims d = conv_dims(x, w, stride, pad, "conv2d");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != d.F))
    throw ShapeError("conv2d: bias must have shape [F]");

  MatrixXd cols = im2col(x.values(), d, stride, pad);
  RowMajorMap wm(w.data(), d.F, d.C * d.KH * d.KW);
  MatrixXd y = wm * cols;
  if (bias.defined()) y.colwise() += Eigen::Map<const Eigen::VectorXd>(
                          bias.data(), d.F);

  long P = d.OH * d.OW;
  auto xi = x.impl(), wi = w.impl();
  auto bi = bias.defined() ? bias.impl() : nullptr;
  return make_op(
      {d.N, d.F, d.OH, d.OW}, from_filter_matrix(y, d.N, d.F, P), {x, w, bias},
      [xi, wi, bi, d, stride, pad, P](const TensorImpl& out) {
        MatrixXd gy = to_filter_matrix(out.grad, d.N, d.F, P);
        RowMajorMap wmat(wi->val.data(), d.F, d.C * d.KH * d.KW);
        if (wi->requires_grad) {
          MatrixXd cols = im2col(xi->val, d, stride, pad);
          MatrixXd gw = gy * cols.transpose();
          wi->grad_buffer() += Eigen::Map<const ArrayXd>(
              MatrixXd(gw.transpose()).data(), wi->val.size());
        }
        if (bi && bi->requires_grad)
          bi->grad_buffer() += gy.rowwise().sum().array();
        if (xi->requires_grad) {
          MatrixXd gcols = wmat.transpose() * gy;
          ArrayXd gx = ArrayXd::Zero(xi->val.size());
          col2im_add(gcols, d, stride, pad, gx);
          xi->accum_grad(gx);
        }
      });
}

Tensor transposed_conv2d(const Tensor& x, const Tensor& w, int stride) {
  check_rank4(x, "transposed_conv2d");
  check_rank4(w, "transposed_conv2d");
  if (stride < 1) throw ShapeError("transposed_conv2d: stride must be >= 1");
  long N = x.dim(0), F = x.dim(1), h = x.dim(2), wd = x.dim(3);
  if (w.dim(0) != F)
    throw ShapeError("transposed_conv2d: weight dim0 must match channels");
  long C = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  long H2 = stride * (h - 1) + KH, W2 = stride * (wd - 1) + KW;

  // Geometry of the conv this op is adjoint to.
  ConvDims d{N, C, H2, W2, F, KH, KW, h, wd};
  long P = h * wd;
  RowMajorMap wm(w.data(), F, C * KH * KW);
  MatrixXd xm = to_filter_matrix(x.values(), N, F, P);
  MatrixXd cols = wm.transpose() * xm;
  ArrayXd y = ArrayXd::Zero(N * C * H2 * W2);
  col2im_add(cols, d, stride, /*pad=*/0, y);

  auto xi = x.impl(), wi = w.impl();
  return make_op(
      {N, C, H2, W2}, std::move(y), {x, w},
      [xi, wi, d, stride, N, F, P](const TensorImpl& out) {
        MatrixXd gcols = im2col(out.grad, d, stride, 0);
        if (xi->requires_grad) {
          RowMajorMap wmat(wi->val.data(), d.F, d.C * d.KH * d.KW);
          MatrixXd gx = wmat * gcols;
          xi->accum_grad(from_filter_matrix(gx, N, F, P));
        }
        if (wi->requires_grad) {
          MatrixXd xm = to_filter_matrix(xi->val, N, F, P);
          MatrixXd gw = xm * gcols.transpose();
          wi->grad_buffer() += Eigen::Map<const ArrayXd>(
              MatrixXd(gw.transpose()).data(), wi->val.size());
        }
      });
}

Tensor maxpool2d(const Tensor& x, int n, int stride, int pad) {
  check_rank4(x, "maxpool2d");
  if (n < 1 || stride < 1 || pad < 0 || pad >= n)
    throw ShapeError("maxpool2d: invalid window/stride/pad");
  long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  long OH = (H + 2 * pad - n) / stride + 1;
  long OW = (W + 2 * pad - n) / stride + 1;
  if (OH < 1 || OW < 1) throw ShapeError("maxpool2d: window larger than input");

  ArrayXd y(N * C * OH * OW);
  auto argmax = std::make_shared<std::vector<long>>(y.size());
  for (long nc = 0; nc < N * C; ++nc) {
    const double* plane = x.data() + nc * H * W;
    for (long oy = 0; oy < OH; ++oy)
      for (long ox = 0; ox < OW; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        long best_idx = -1;
        for (long kr = 0; kr < n; ++kr) {
          long iy = oy * stride + kr - pad;
          if (iy < 0 || iy >= H) continue;
          for (long kc = 0; kc < n; ++kc) {
            long ix = ox * stride + kc - pad;
            if (ix < 0 || ix >= W) continue;
            double v = plane[iy * W + ix];
            if (v > best) {
              best = v;
              best_idx = iy * W + ix;
            }
          }
        }
        long o = (nc * OH + oy) * OW + ox;
        y[o] = best;
        (*argmax)[static_cast<size_t>(o)] = nc * H * W + best_idx;
      }
  }

  auto xi = x.impl();
  return make_op({N, C, OH, OW}, std::move(y), {x},
                 [xi, argmax](const TensorImpl& out) {
                   if (!xi->requires_grad) return;
                   ArrayXd& gx = xi->grad_buffer();
                   for (long o = 0; o < out.grad.size(); ++o)
                     gx[(*argmax)[static_cast<size_t>(o)]] += out.grad[o];
                 });
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 Tensor& running_mean, Tensor& running_var, bool training,
                 double momentum, double eps) {
  check_rank4(x, "batchnorm");
  long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  long plane = H * W, M = N * plane;
  auto check_c = [&](const Tensor& t, const char* name) {
    if (!t.defined() || t.size() != C)
      throw ShapeError(std::string("batchnorm: ") + name +
                       " must have one entry per channel");
  };
  check_c(gamma, "gamma");
  check_c(beta, "beta");
  check_c(running_mean, "running_mean");
  check_c(running_var, "running_var");

  ArrayXd mean(C), var(C);
  if (training) {
    for (long c = 0; c < C; ++c) {
      double s = 0.0, s2 = 0.0;
      for (long n = 0; n < N; ++n) {
        const double* p = x.data() + (n * C + c) * plane;
        for (long i = 0; i < plane; ++i) {
          s += p[i];
          s2 += p[i] * p[i];
        }
      }
      mean[c] = s / M;
      var[c] = std::max(s2 / M - mean[c] * mean[c], 0.0);
    }
    running_mean.values() =
        (1.0 - momentum) * running_mean.values() + momentum * mean;
    running_var.values() =
        (1.0 - momentum) * running_var.values() + momentum * var;
  } else {
    mean = running_mean.values();
    var = running_var.values();
  }
  ArrayXd istd = (var + eps).sqrt().inverse();

  ArrayXd y(x.size());
  for (long n = 0; n < N; ++n)
    for (long c = 0; c < C; ++c) {
      const double* p = x.data() + (n * C + c) * plane;
      double* q = y.data() + (n * C + c) * plane;
      double g = gamma.values()[c], b = beta.values()[c];
      double mu = mean[c], is = istd[c];
      for (long i = 0; i < plane; ++i) q[i] = g * (p[i] - mu) * is + b;
    }

  auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl();
  auto stats = std::make_shared<std::pair<ArrayXd, ArrayXd>>(mean, istd);
  return make_op(
      x.shape(), std::move(y), {x, gamma, beta},
      [xi, gi, bi, stats, N, C, plane, M, training](const TensorImpl& out) {
        const ArrayXd& mean = stats->first;
        const ArrayXd& istd = stats->second;
        for (long c = 0; c < C; ++c) {
          // Channel-wise reductions of dy and dy*xhat.
          double sum_dy = 0.0, sum_dyx = 0.0;
          for (long n = 0; n < N; ++n) {
            const double* xp = xi->val.data() + (n * C + c) * plane;
            const double* gp = out.grad.data() + (n * C + c) * plane;
            for (long i = 0; i < plane; ++i) {
              sum_dy += gp[i];
              sum_dyx += gp[i] * (xp[i] - mean[c]) * istd[c];
            }
          }
          if (gi->requires_grad) gi->grad_buffer()[c] += sum_dyx;
          if (bi->requires_grad) bi->grad_buffer()[c] += sum_dy;
          if (xi->requires_grad) {
            double g = gi->val[c], is = istd[c];
            ArrayXd& gx = xi->grad_buffer();
            for (long n = 0; n < N; ++n) {
              const double* xp = xi->val.data() + (n * C + c) * plane;
              const double* gp = out.grad.data() + (n * C + c) * plane;
              double* dst = gx.data() + (n * C + c) * plane;
              for (long i = 0; i < plane; ++i) {
                if (training) {
                  double xhat = (xp[i] - mean[c]) * is;
                  dst[i] += g * is *
                            (gp[i] - sum_dy / M - xhat * sum_dyx / M);
                } else {
                  dst[i] += g * is * gp[i];
                }
              }
            }
          }
        }
      });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  check_same_shape(pred, target, "l1_loss");
  check_same_shape(pred, mask, "l1_loss");
  long n_valid = (mask.values() > 0.5).count();
  if (n_valid == 0) throw EmptyMaskError("l1_loss: no valid pixel under mask");

  ArrayXd m = (mask.values() > 0.5).cast<double>();
  ArrayXd diff = pred.values() - target.values();
  ArrayXd v(1);
  v[0] = (m * diff.abs()).sum() / n_valid;

  auto pi = pred.impl();
  auto sgn = std::make_shared<ArrayXd>(m * diff.sign() / n_valid);
  return make_op({1}, std::move(v), {pred, target, mask},
                 [pi, sgn](const TensorImpl& out) {
                   if (pi->requires_grad) pi->accum_grad(out.grad[0] * *sgn);
                 });
}

Tensor upsample_nearest2(const Tensor& x) {
  check_rank4(x, "upsample_nearest2");
  long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  ArrayXd y(N * C * 4 * H * W);
  for (long nc = 0; nc < N * C; ++nc) {
    const double* src = x.data() + nc * H * W;
    double* dst = y.data() + nc * 4 * H * W;
    for (long oy = 0; oy < 2 * H; ++oy)
      for (long ox = 0; ox < 2 * W; ++ox)
        dst[oy * 2 * W + ox] = src[(oy / 2) * W + ox / 2];
  }
  auto xi = x.impl();
  return make_op({N, C, 2 * H, 2 * W}, std::move(y), {x},
                 [xi, N, C, H, W](const TensorImpl& out) {
                   if (!xi->requires_grad) return;
                   ArrayXd& gx = xi->grad_buffer();
                   for (long nc = 0; nc < N * C; ++nc) {
                     const double* g = out.grad.data() + nc * 4 * H * W;
                     double* dst = gx.data() + nc * H * W;
                     for (long oy = 0; oy < 2 * H; ++oy)
                       for (long ox = 0; ox < 2 * W; ++ox)
                         dst[(oy / 2) * W + ox / 2] += g[oy * 2 * W + ox];
                   }
                 });
}

Tensor resize_bilinear(const Tensor& x, int out_h, int out_w) {
  check_rank4(x, "resize_bilinear");
  if (out_h < 1 || out_w < 1)
    throw ShapeError("resize_bilinear: output dims must be positive");
  long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  auto ty = std::make_shared<std::vector<AxisTap>>(resize_taps(H, out_h));
  auto tx = std::make_shared<std::vector<AxisTap>>(resize_taps(W, out_w));

  ArrayXd y(N * C * out_h * out_w);
  for (long nc = 0; nc < N * C; ++nc) {
    const double* src = x.data() + nc * H * W;
    double* dst = y.data() + nc * out_h * out_w;
    for (long oy = 0; oy < out_h; ++oy) {
      const AxisTap& a = (*ty)[static_cast<size_t>(oy)];
      for (long ox = 0; ox < out_w; ++ox) {
        const AxisTap& b = (*tx)[static_cast<size_t>(ox)];
        double top = (1 - b.f) * src[a.i0 * W + b.i0] + b.f * src[a.i0 * W + b.i1];
        double bot = (1 - b.f) * src[a.i1 * W + b.i0] + b.f * src[a.i1 * W + b.i1];
        dst[oy * out_w + ox] = (1 - a.f) * top + a.f * bot;
      }
    }
  }
  auto xi = x.impl();
  return make_op(
      {N, C, out_h, out_w}, std::move(y), {x},
      [xi, ty, tx, N, C, H, W, out_h, out_w](const TensorImpl& out) {
        if (!xi->requires_grad) return;
        ArrayXd& gx = xi->grad_buffer();
        for (long nc = 0; nc < N * C; ++nc) {
          const double* g = out.grad.data() + nc * out_h * out_w;
          double* dst = gx.data() + nc * H * W;
          for (long oy = 0; oy < out_h; ++oy) {
            const AxisTap& a = (*ty)[static_cast<size_t>(oy)];
            for (long ox = 0; ox < out_w; ++ox) {
              const AxisTap& b = (*tx)[static_cast<size_t>(ox)];
              double go = g[oy * out_w + ox];
              dst[a.i0 * W + b.i0] += (1 - a.f) * (1 - b.f) * go;
              dst[a.i0 * W + b.i1] += (1 - a.f) * b.f * go;
              dst[a.i1 * W + b.i0] += a.f * (1 - b.f) * go;
              dst[a.i1 * W + b.i1] += a.f * b.f * go;
            }
          }
        }
      });
}

Tensor reduce_max_last(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("reduce_max_last: rank-0 input");
  long T = x.dim(x.rank() - 1);
  long outer = x.size() / T;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  ArrayXd y(outer);
  auto argmax = std::make_shared<std::vector<long>>(static_cast<size_t>(outer));
  for (long o = 0; o < outer; ++o) {
    const double* p = x.data() + o * T;
    long best = 0;
    for (long t = 1; t < T; ++t)
      if (p[t] > p[best]) best = t;
    y[o] = p[best];
    (*argmax)[static_cast<size_t>(o)] = o * T + best;
  }
  auto xi = x.impl();
  return make_op(std::move(out_shape), std::move(y), {x},
                 [xi, argmax](const TensorImpl& out) {
                   if (!xi->requires_grad) return;
                   ArrayXd& gx = xi->grad_buffer();
                   for (long o = 0; o < out.grad.size(); ++o)
                     gx[(*argmax)[static_cast<size_t>(o)]] += out.grad[o];
                 });
}

Tensor reduce_mean_last(const Tensor& x) {
  if (x.rank() < 1) throw ShapeError("reduce_mean_last: rank-0 input");
  long T = x.dim(x.rank() - 1);
  long outer = x.size() / T;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  ArrayXd y(outer);
  for (long o = 0; o < outer; ++o)
    y[o] = Eigen::Map<const ArrayXd>(x.data() + o * T, T).mean();
  auto xi = x.impl();
  return make_op(std::move(out_shape), std::move(y), {x},
                 [xi, T](const TensorImpl& out) {
                   if (!xi->requires_grad) return;
                   ArrayXd& gx = xi->grad_buffer();
                   for (long o = 0; o < out.grad.size(); ++o) {
                     double g = out.grad[o] / T;
                     for (long t = 0; t < T; ++t) gx[o * T + t] += g;
                   }
                 });
}

}  // namespace uwdepth::ad
