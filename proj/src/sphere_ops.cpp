#include "uwdepth/sphere_ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace uwdepth::sph {

using ad::Tensor;
using ad::detail::TensorImpl;
using ad::detail::make_op;
using Eigen::ArrayXd;
using Eigen::MatrixXd;

GatherPlan GatherPlan::build(const geo::SamplingGrid& grid) {
  GatherPlan plan;
  plan.in_w = grid.in_w;
  plan.in_h = grid.in_h;
  plan.out_w = grid.out_w;
  plan.out_h = grid.out_h;
  plan.n = grid.n;
  plan.stride = grid.stride;
  size_t count = grid.coords.size();
  plan.idx.resize(count * 4);
  plan.weight.resize(count * 4);

  int W = grid.in_w, H = grid.in_h;
  for (size_t s = 0; s < count; ++s) {
    const geo::PixelCoord& p = grid.coords[s];
    double u0f = std::floor(p.u);
    double fu = p.u - u0f;
    int u0 = static_cast<int>(u0f) % W;
    int u1 = (u0 + 1) % W;
    double v0f = std::floor(p.v);
    int v0 = static_cast<int>(v0f);
    int v1 = std::min(v0 + 1, H - 1);
    double fv = p.v - v0f;
    int32_t* id = plan.idx.data() + s * 4;
    double* wt = plan.weight.data() + s * 4;
    id[0] = v0 * W + u0;
    id[1] = v0 * W + u1;
    id[2] = v1 * W + u0;
    id[3] = v1 * W + u1;
    wt[0] = (1.0 - fu) * (1.0 - fv);
    wt[1] = fu * (1.0 - fv);
    wt[2] = (1.0 - fu) * fv;
    wt[3] = fu * fv;
  }
  return plan;
}

PlanPtr cached_plan(int width, int height, const geo::KernelSpec& k,
                    int stride) {
  static std::mutex mu;
  struct Key {
    int w, h, n, stride;
    double dt, dp;
    auto tie() const { return std::tie(w, h, n, stride, dt, dp); }
    bool operator<(const Key& o) const { return tie() < o.tie(); }
  };
  static std::map<Key, std::shared_ptr<const GatherPlan>> cache;
  Key key{width, height, k.n, stride, k.delta_theta, k.delta_phi};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto grid = geo::cached_grid(width, height, k, stride);
  auto plan = std::make_shared<const GatherPlan>(GatherPlan::build(*grid));
  cache.emplace(key, plan);
  return plan;
}

namespace {

void check_plan(const Tensor& x, const PlanPtr& plan, const char* op) {
  if (!plan) throw ShapeError(std::string(op) + ": null plan");
  if (x.rank() != 4)
    throw ShapeError(std::string(op) + ": expected rank-4 input");
  if (x.dim(2) != plan->in_h || x.dim(3) != plan->in_w)
    throw ShapeError(std::string(op) + ": input " + ad::shape_str(x.shape()) +
                     " does not match plan built for " +
                     std::to_string(plan->in_h) + "x" +
                     std::to_string(plan->in_w));
}

}  // namespace

Tensor bilinear_gather(const Tensor& x, const PlanPtr& plan) {
  check_plan(x, plan, "bilinear_gather");
  long N = x.dim(0), C = x.dim(1);
  long HW = static_cast<long>(plan->in_h) * plan->in_w;
  long P = static_cast<long>(plan->out_h) * plan->out_w;
  long T = plan->taps();
  long S = P * T;  // samples per plane

  ArrayXd y(N * C * S);
  for (long nc = 0; nc < N * C; ++nc) {
    const double* src = x.data() + nc * HW;
    double* dst = y.data() + nc * S;
    for (long s = 0; s < S; ++s) {
      const int32_t* id = plan->idx.data() + s * 4;
      const double* wt = plan->weight.data() + s * 4;
      dst[s] = wt[0] * src[id[0]] + wt[1] * src[id[1]] + wt[2] * src[id[2]] +
               wt[3] * src[id[3]];
    }
  }

  auto xi = x.impl();
  PlanPtr pp = plan;  // keep the plan alive for the backward pass
  return make_op({N, C, plan->out_h, plan->out_w, T}, std::move(y), {x},
                 [xi, pp, N, C, HW, S](const TensorImpl& out) {
                   if (!xi->requires_grad) return;
                   ArrayXd& gx = xi->grad_buffer();
                   for (long nc = 0; nc < N * C; ++nc) {
                     double* dst = gx.data() + nc * HW;
                     const double* g = out.grad.data() + nc * S;
                     for (long s = 0; s < S; ++s) {
                       const int32_t* id = pp->idx.data() + s * 4;
                       const double* wt = pp->weight.data() + s * 4;
                       dst[id[0]] += wt[0] * g[s];
                       dst[id[1]] += wt[1] * g[s];
                       dst[id[2]] += wt[2] * g[s];
                       dst[id[3]] += wt[3] * g[s];
                     }
                   }
                 });
}

namespace {

// Gathered tensor [N,C,P,T] as a (C*T) x (N*P) matrix for the kernel
// contraction; row index c*T+t, column index n*P+p.
MatrixXd gathered_matrix(const ArrayXd& g, long N, long C, long P, long T) {
  MatrixXd m(C * T, N * P);
  for (long n = 0; n < N; ++n)
    for (long c = 0; c < C; ++c) {
      const double* src = g.data() + (n * C + c) * P * T;
      for (long p = 0; p < P; ++p)
        for (long t = 0; t < T; ++t) m(c * T + t, n * P + p) = src[p * T + t];
    }
  return m;
}

void scatter_gathered(const MatrixXd& m, long N, long C, long P, long T,
                      ArrayXd& g) {
  for (long n = 0; n < N; ++n)
    for (long c = 0; c < C; ++c) {
      double* dst = g.data() + (n * C + c) * P * T;
      for (long p = 0; p < P; ++p)
        for (long t = 0; t < T; ++t) dst[p * T + t] += m(c * T + t, n * P + p);
    }
}

// Contraction of gathered[N,C,P,T] with w[F,C,n,n]: kernel tap (r,c) pairs
// with grid sample t = r*n+c, so the flat weight layout maps directly.
Tensor tap_contract(const Tensor& gathered, const Tensor& w,
                    const Tensor& bias, long out_h, long out_w) {
  long N = gathered.dim(0), C = gathered.dim(1);
  long P = gathered.dim(2) * gathered.dim(3), T = gathered.dim(4);
  long F = w.dim(0);
  if (w.dim(1) != C || w.dim(2) * w.dim(3) != T)
    throw ShapeError("sphere_conv2d: weight " + ad::shape_str(w.shape()) +
                     " incompatible with gathered " +
                     ad::shape_str(gathered.shape()));
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != F))
    throw ShapeError("sphere_conv2d: bias must have shape [F]");

  using RowMajorMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;
  RowMajorMap wm(w.data(), F, C * T);
  MatrixXd gm = gathered_matrix(gathered.values(), N, C, P, T);
  MatrixXd y = wm * gm;
  if (bias.defined())
    y.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.data(), F);

  ArrayXd out(N * F * P);
  for (long n = 0; n < N; ++n)
    for (long f = 0; f < F; ++f)
      Eigen::Map<Eigen::RowVectorXd>(out.data() + (n * F + f) * P, P) =
          y.row(f).segment(n * P, P);

  auto gi = gathered.impl(), wi = w.impl();
  auto bi = bias.defined() ? bias.impl() : nullptr;
  return make_op(
      {N, F, out_h, out_w}, std::move(out), {gathered, w, bias},
      [gi, wi, bi, N, C, P, T, F](const TensorImpl& o) {
        MatrixXd gy(F, N * P);
        for (long n = 0; n < N; ++n)
          for (long f = 0; f < F; ++f)
            gy.row(f).segment(n * P, P) = Eigen::Map<const Eigen::RowVectorXd>(
                o.grad.data() + (n * F + f) * P, P);
        if (bi && bi->requires_grad)
          bi->grad_buffer() += gy.rowwise().sum().array();
        if (wi->requires_grad) {
          MatrixXd gm = gathered_matrix(gi->val, N, C, P, T);
          MatrixXd gw = gy * gm.transpose();  // F x C*T
          wi->grad_buffer() += Eigen::Map<const ArrayXd>(
              MatrixXd(gw.transpose()).data(), wi->val.size());
        }
        if (gi->requires_grad) {
          using WMap = Eigen::Map<const Eigen::Matrix<
              double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
          WMap wm(wi->val.data(), F, C * T);
          MatrixXd gg = wm.transpose() * gy;
          ArrayXd acc = ArrayXd::Zero(gi->val.size());
          scatter_gathered(gg, N, C, P, T, acc);
          gi->accum_grad(acc);
        }
      });
}

}  // namespace

Tensor sphere_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias,
                     const PlanPtr& plan) {
  check_plan(x, plan, "sphere_conv2d");
  if (w.rank() != 4 || w.dim(2) != plan->n || w.dim(3) != plan->n)
    throw ShapeError("sphere_conv2d: weight kernel side must equal plan n");
  Tensor gathered = bilinear_gather(x, plan);
  return tap_contract(gathered, w, bias, plan->out_h, plan->out_w);
}

Tensor sphere_pool(const Tensor& x, const PlanPtr& plan, PoolMode mode) {
  check_plan(x, plan, "sphere_pool");
  Tensor gathered = bilinear_gather(x, plan);
  return mode == PoolMode::max ? ad::reduce_max_last(gathered)
                               : ad::reduce_mean_last(gathered);
}

}  // namespace uwdepth::sph
