// SPDX-License-Identifier: Apache-2.0
#include "dpl/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace dpl::inline DPL_PRECISION_NS {

std::size_t shape_numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

void check_shape(const Shape& shape) {
  for (auto d : shape)
    if (d == 0) throw std::invalid_argument("tensor dimensions must be positive, got " + shape_to_string(shape));
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), real(0), requires_grad); }

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  check_shape(shape);
  const auto n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<real>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<real> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("tensor shape " + shape_to_string(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(real value, bool requires_grad) { return from_data({}, {value}, requires_grad); }

Tensor Tensor::make_result(Shape shape, std::vector<real> values, bool requires_grad) {
  auto t = from_data(std::move(shape), std::move(values), requires_grad);
  t.node_->is_leaf = false;
  return t;
}

detail::TensorNode& Tensor::node() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return node().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw std::out_of_range("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return node().data.size(); }

std::span<const real> Tensor::data() const { return node().data; }
std::span<real> Tensor::mutable_data() { return node().data; }

real Tensor::item() const {
  const auto& n = node();
  if (n.data.size() != 1)
    throw std::invalid_argument("item() needs a single-element tensor, got " + shape_to_string(n.shape));
  return n.data[0];
}

bool Tensor::requires_grad() const { return node().requires_grad; }

void Tensor::set_requires_grad(bool value) { node().requires_grad = value; }

bool Tensor::is_leaf() const { return node().is_leaf; }

bool Tensor::has_grad() const { return !node().grad.empty(); }

std::span<const real> Tensor::grad() const { return node().grad; }

std::span<real> Tensor::mutable_grad() { return grad_buffer(node()); }

void Tensor::zero_grad() {
  auto& g = node().grad;
  std::fill(g.begin(), g.end(), real(0));
}

void Tensor::accumulate_grad(std::span<const real> contribution) {
  auto& g = grad_buffer(node());
  if (contribution.size() != g.size())
    throw std::invalid_argument("gradient contribution has " + std::to_string(contribution.size()) +
                                " values, tensor has " + std::to_string(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += contribution[i];
}

Tensor Tensor::detach() const {
  const auto& n = node();
  return from_data(n.shape, n.data, false);
}

std::vector<real>& grad_buffer(detail::TensorNode& node) {
  if (node.grad.size() != node.data.size()) node.grad.assign(node.data.size(), real(0));
  return node.grad;
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
}

void Tape::record(const Tensor& output, BackwardFn backward) {
  entries_.push_back({output.node_ptr(), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw std::invalid_argument("backward: loss tensor is undefined");
  if (loss.rank() != 0)
    throw std::invalid_argument("backward: loss must be rank-0, got shape " + shape_to_string(loss.shape()));
  auto it = std::find_if(entries_.rbegin(), entries_.rend(),
                         [&](const Entry& e) { return e.output == loss.node_ptr(); });
  if (it == entries_.rend()) throw std::invalid_argument("backward: loss was not produced under this tape");

  const auto last = static_cast<std::size_t>(std::distance(it, entries_.rend())) - 1;
  // Intermediate gradients are per-pass; leaf gradients persist and accumulate.
  for (std::size_t i = 0; i <= last; ++i) {
    auto& out = *entries_[i].output;
    out.grad.assign(out.data.size(), real(0));
  }
  loss.node().grad[0] = real(1);
  for (std::size_t i = last + 1; i-- > 0;) entries_[i].backward();
}

}  // namespace dpl::inline DPL_PRECISION_NS
