#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "uwdepth/errors.hpp"

namespace uwdepth::ad {

using Shape = std::vector<long>;

long numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

struct TensorImpl;

/// One recorded operation: the tensors it read and a closure that, given the
/// output's gradient, accumulates gradients into those inputs.
struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  Shape shape;
  Eigen::ArrayXd val;   // flat, row-major over `shape`
  Eigen::ArrayXd grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // creator op; null for leaves

  long size() const { return val.size(); }
  /// Gradient buffer, lazily zero-initialized.
  Eigen::ArrayXd& grad_buffer();
  void accum_grad(const Eigen::Ref<const Eigen::ArrayXd>& g);
};

}  // namespace detail

/// Dense N-d tensor of doubles with optional reverse-mode gradient tracking.
/// Copies are shallow (shared storage), matching graph-node identity.
class Tensor {
 public:
  Tensor() = default;
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from_data(Shape shape, std::vector<double> data);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  long dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  long size() const { return impl_->size(); }

  Eigen::ArrayXd& values() { return impl_->val; }
  const Eigen::ArrayXd& values() const { return impl_->val; }
  double* data() { return impl_->val.data(); }
  const double* data() const { return impl_->val.data(); }

  /// Value of a rank-0/size-1 tensor.
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool flag);

  /// Accumulated gradient; zeros if backward never touched this tensor.
  Eigen::ArrayXd grad() const;
  void zero_grad();

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl)
      : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

/// While alive, newly created ops are not recorded (pure evaluation mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

namespace detail {
/// Creates the output tensor of an op, wiring the backward rule when any
/// input requires a gradient and grad mode is on.
Tensor make_op(Shape shape, Eigen::ArrayXd val, std::vector<Tensor> inputs,
               std::function<void(const TensorImpl&)> backward);
}

/// Reverse-mode sweep from a scalar loss: fills `grad` on every reachable
/// tensor that requires one. Gradients accumulate across uses and across
/// repeated calls. Throws GraphError when loss is not scalar.
void backward(const Tensor& loss);

}  // namespace uwdepth::ad
