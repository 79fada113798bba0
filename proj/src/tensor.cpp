#include "uwdepth/tensor.hpp"

#include <unordered_set>
#include <utility>

namespace uwdepth::ad {

long numel(const Shape& s) {
  long n = 1;
  for (long d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

Eigen::ArrayXd& TensorImpl::grad_buffer() {
  if (grad.size() == 0) grad = Eigen::ArrayXd::Zero(val.size());
  return grad;
}

void TensorImpl::accum_grad(const Eigen::Ref<const Eigen::ArrayXd>& g) {
  grad_buffer() += g;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->val = Eigen::ArrayXd::Zero(numel(shape));
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, double value) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->val = Eigen::ArrayXd::Constant(numel(shape), value);
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  if (numel(shape) != static_cast<long>(data.size()))
    throw ShapeError("from_data: " + std::to_string(data.size()) +
                     " values for shape " + shape_str(shape));
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->val = Eigen::Map<const Eigen::ArrayXd>(data.data(),
                                               static_cast<long>(data.size()));
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value) { return full({1}, value); }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item: tensor is not scalar");
  return impl_->val[0];
}

Tensor& Tensor::set_requires_grad(bool flag) {
  impl_->requires_grad = flag;
  return *this;
}

Eigen::ArrayXd Tensor::grad() const {
  if (impl_->grad.size() == 0) return Eigen::ArrayXd::Zero(size());
  return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.resize(0); }

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

namespace detail {

Tensor make_op(Shape shape, Eigen::ArrayXd val, std::vector<Tensor> inputs,
               std::function<void(const TensorImpl&)> backward) {
  if (numel(shape) != val.size())
    throw ShapeError("make_op: value size does not match shape");
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->val = std::move(val);
  bool needs = false;
  if (g_grad_enabled)
    for (const Tensor& t : inputs)
      if (t.defined() && t.requires_grad()) needs = true;
  if (needs) {
    impl->requires_grad = true;
    auto node = std::make_shared<Node>();
    for (const Tensor& t : inputs)
      if (t.defined()) node->inputs.push_back(t.impl());
    node->backward = std::move(backward);
    impl->node = std::move(node);
  }
  return Tensor(std::move(impl));
}

}  // namespace detail

void backward(const Tensor& loss) {
  using detail::TensorImpl;
  if (!loss.defined() || loss.size() != 1)
    throw GraphError("backward: loss must be a defined scalar");

  // Post-order DFS over creator nodes; reverse order is a valid backward
  // schedule visiting each node exactly once.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  struct Frame {
    TensorImpl* t;
    size_t next = 0;
  };
  std::vector<Frame> stack;
  TensorImpl* root = loss.impl().get();
  if (root->node && seen.insert(root).second) stack.push_back({root});
  while (!stack.empty()) {
    Frame& f = stack.back();
    auto& ins = f.t->node->inputs;
    if (f.next < ins.size()) {
      TensorImpl* child = ins[f.next++].get();
      if (child->node && seen.insert(child).second) stack.push_back({child});
    } else {
      order.push_back(f.t);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = *it;
    if (t->grad.size() == 0) t->grad_buffer();  // zero upstream contribution
    t->node->backward(*t);
  }
}

}  // namespace uwdepth::ad
