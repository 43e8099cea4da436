// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "arrivalnet/errors.hpp"

namespace arrivalnet {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

// One recorded node of the computation tape. Leaves have no parents; interior
// nodes keep their inputs alive and carry the rule that routes the output
// gradient back to them. backward() replays the tape in reverse topological
// order, so each node's rule runs exactly once.
struct Node {
    Shape shape;
    std::vector<double> value;
    bool requires_grad = false;
    std::vector<double> grad;  // allocated lazily, same extent as value
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_rule;

    int64_t numel() const { return static_cast<int64_t>(value.size()); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

}  // namespace detail

/// Dense row-major tensor of 64-bit floats with reverse-mode autodiff.
/// Value semantics: copies share the underlying node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar_value(double v);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    size_t rank() const { return node_->shape.size(); }
    int64_t dim(size_t i) const { return node_->shape.at(i); }
    int64_t numel() const { return node_->numel(); }

    std::span<const double> data() const { return node_->value; }
    // Direct mutation is reserved for leaves (parameter updates); mutating an
    // interior node would desynchronize the recorded tape.
    std::span<double> mutable_data();

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const double> grad() const;
    void zero_grad();

    double scalar() const;
    double at(std::initializer_list<int64_t> idx) const;

    std::shared_ptr<detail::Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Populates grads of every requires_grad leaf reachable from `loss`.
/// Gradients accumulate additively across calls; the tape behind `loss` is
/// released afterwards.
void backward(const Tensor& loss);

bool grad_mode_enabled();

/// Disables tape recording within a scope (inference, oracles).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Elementwise and structural primitives. All record backward rules when grad
// mode is on and any input requires gradients.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

/// Adds a vector over the last axis of x (bias broadcast).
Tensor add_last_axis(const Tensor& x, const Tensor& v);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);
Tensor softmax(const Tensor& x, size_t axis);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
Tensor gelu(const Tensor& x);

/// 1-D convolution over the leading (temporal) axis with zero same-padding.
/// x: [T, Cin], kernel: [K, Cin, Cout], K odd.
Tensor conv1d_same(const Tensor& x, const Tensor& kernel);

/// 2-D convolution with zero same-padding. x: [H, W, Cin],
/// kernel: [k, k, Cin, Cout], k odd.
Tensor conv2d_same(const Tensor& x, const Tensor& kernel);

Tensor sum(const Tensor& x);
Tensor mean_squared_error(const Tensor& pred, const Tensor& target);

Tensor reshape(const Tensor& x, Shape new_shape);

/// Generalized gather: out flat element i = x flat element src_index[i],
/// or 0 where src_index[i] == -1. Backward scatter-adds. Padding, cropping,
/// cyclic rolls and window partitions are all built on this.
Tensor take(const Tensor& x, Shape out_shape, std::vector<int64_t> src_index);

Tensor concat_last_axis(const Tensor& a, const Tensor& b);

/// Concatenates rank-2 tensors with equal column counts along axis 0.
Tensor stack_rows(std::span<const Tensor> parts);

/// Elementwise sqrt(a^2 + b^2); gradient is zero where the magnitude is zero.
Tensor elementwise_hypot(const Tensor& a, const Tensor& b);

/// Mean over the last axis; [..., d] -> [...].
Tensor mean_last_axis(const Tensor& x);

/// out = sum_j w[j] * ys[j]; differentiable in both the branches and the
/// weight vector.
Tensor weighted_sum(std::span<const Tensor> ys, const Tensor& w);

}  // namespace arrivalnet
