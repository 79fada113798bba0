#pragma once

#include <string>
#include <vector>

#include "uwdepth/tensor.hpp"

namespace uwdepth::ad {

/// A named model tensor. `learnable` tensors receive SGD updates; `decay`
/// marks those that weight decay applies to (conv weights only).
struct Parameter {
  std::string name;
  Tensor tensor;
  bool learnable = true;
  bool decay = false;
};

/// SGD with momentum and L2-in-gradient weight decay.
struct OptimizerState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epoch = 0;
  std::vector<Eigen::ArrayXd> velocity;  // parallel to the parameter list
};

/// v <- mu*v + (g + lambda*w); w <- w - lr*v; gradients are zeroed after the
/// step. Only learnable parameters move; lambda applies where decay is set.
void sgd_step(std::vector<Parameter>& params, OptimizerState& opt);

/// Start rate reduced 20% every 5 epochs: lr0 * 0.8^(epoch/5).
double lr_schedule(int epoch, double lr0);

/// Generalized schedule; `every <= 0` disables decay.
double lr_schedule(int epoch, double lr0, double factor, int every);

}  // namespace uwdepth::ad
