#include "uwdepth/optim.hpp"

#include <cmath>

namespace uwdepth::ad {

void sgd_step(std::vector<Parameter>& params, OptimizerState& opt) {
  if (opt.velocity.size() != params.size())
    opt.velocity.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    if (!p.learnable) continue;
    Eigen::ArrayXd g = p.tensor.grad();
    if (p.decay && opt.weight_decay != 0.0)
      g += opt.weight_decay * p.tensor.values();
    Eigen::ArrayXd& v = opt.velocity[i];
    if (v.size() == 0) v = Eigen::ArrayXd::Zero(p.tensor.size());
    v = opt.momentum * v + g;
    p.tensor.values() -= opt.learning_rate * v;
    p.tensor.zero_grad();
  }
}

double lr_schedule(int epoch, double lr0) {
  return lr_schedule(epoch, lr0, 0.8, 5);
}

double lr_schedule(int epoch, double lr0, double factor, int every) {
  if (every <= 0) return lr0;
  return lr0 * std::pow(factor, epoch / every);
}

}  // namespace uwdepth::ad
