#pragma once

#include <span>
#include <vector>

#include "dynkt/tensor.hpp"

// Differentiable primitives. Binary elementwise ops accept either equal
// shapes or a right operand whose shape equals a trailing suffix of the left
// operand's shape (bias-style broadcast over leading dimensions).

namespace dynkt::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);

/// [M, K] x [K, N] -> [M, N].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& a, Shape shape);

/// Full reduction to a rank-0 tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Reduction over one axis; the axis is removed from the shape.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);

/// d/dx relu(x) at x == 0 is taken as 0.
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);

}  // namespace dynkt::ops
