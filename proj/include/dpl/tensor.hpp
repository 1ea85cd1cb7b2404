// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dpl/config.hpp"

namespace dpl::inline DPL_PRECISION_NS {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<real> data;
  // Empty until a backward pass first touches it.
  std::vector<real> grad;
  bool requires_grad = false;
  bool is_leaf = true;
};

}  // namespace detail

/// Dense row-major array with optional gradient tracking.
///
/// A Tensor is a shared handle: copies refer to the same storage, which is
/// how optimizers and networks see the same parameter. Values are immutable
/// after construction except through mutable_data() (optimizer updates) and
/// the gradient buffer, which only ever gets zeroed or accumulated into.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<real> values, bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const real> data() const;
  std::span<real> mutable_data();
  /// Value of a single-element tensor.
  real item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const real> grad() const;
  std::span<real> mutable_grad();
  void zero_grad();
  /// Adds a same-shaped contribution to the gradient buffer.
  void accumulate_grad(std::span<const real> contribution);

  /// New leaf holding a copy of the values, without gradient tracking.
  Tensor detach() const;

  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

  // Used by Tape and op implementations.
  static Tensor make_result(Shape shape, std::vector<real> values, bool requires_grad);
  detail::TensorNode& node() const;
  const std::shared_ptr<detail::TensorNode>& node_ptr() const noexcept { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

/// Records differentiable operations in execution order and replays their
/// backward rules in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  void record(const Tensor& output, BackwardFn backward);

  /// Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable from
  /// `loss`. Calling it again on the same tape accumulates again.
  void backward(const Tensor& loss);

  void clear() noexcept { entries_.clear(); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  struct Entry {
    std::shared_ptr<detail::TensorNode> output;
    BackwardFn backward;
  };
  std::vector<Entry> entries_;
};

/// Gradient buffer of `node`, allocated (zero-filled) on first use.
std::vector<real>& grad_buffer(detail::TensorNode& node);

/// Zeroes the gradient of every tensor in `params`.
void zero_grads(std::span<Tensor> params);

}  // namespace dpl::inline DPL_PRECISION_NS
