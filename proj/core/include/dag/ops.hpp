#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dag/autodiff.hpp"

namespace dag {

// Differentiable tensor primitives. Matrices are rank-2 row-major; a row
// vector is 1xn.

Var matmul(Var a, Var b);

enum class Elementwise { add, sub, mul, relu, scale, abs };

/// Generic entry point; `add`, `sub`, `mul` take two operands, the rest one.
/// `factor` is only read by `scale`.
Var elementwise(Elementwise kind, std::span<const Var> operands, double factor = 1.0);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// Subgradient at exactly 0 is 0.
Var relu(Var a);
Var scale(Var a, double factor);
/// Subgradient at exactly 0 is 0.
Var abs(Var a);
Var add_scalar(Var a, double c);

/// a [m x n] + bias broadcast over rows; bias has n entries (any shape).
Var add_bias(Var a, Var bias);
/// Elementwise product with a constant tensor of the same size.
Var mul_constant(Var a, const Tensor& factors);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
/// Rank-2 reduction. axis 0 -> [1 x n], axis 1 -> [m x 1].
Var reduce_sum(Var a, std::size_t axis);
/// Sum of all entries as a rank-0 scalar.
Var sum_all(Var a);
Var reshape(Var a, Shape shape);

}  // namespace dag
