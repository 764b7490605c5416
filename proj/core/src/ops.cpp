#include "dag/ops.hpp"

#include <cmath>

#include "dag/errors.hpp"
#include "eigen_map.hpp"

namespace dag {

using detail::as_matrix;

namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ContractViolation(std::string(op) + ": expected rank-2 operand, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw ContractViolation(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows()) throw ContractViolation("matmul: inner dimensions disagree " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  Tensor out(Shape{av.rows(), bv.cols()});
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) as_matrix(tape.grad(a)).noalias() += as_matrix(g) * as_matrix(b.value()).transpose();
    if (tape.requires_grad(b)) as_matrix(tape.grad(b)).noalias() += as_matrix(a.value()).transpose() * as_matrix(g);
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) tape.grad(a) += g;
    if (tape.requires_grad(b)) tape.grad(b) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) tape.grad(a) += g;
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) {
      Tensor& ga = tape.grad(a);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad(b);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    const Tensor& av = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (double& v : out.values()) v *= factor;
  return a.tape().record(std::move(out), {a}, [a, factor](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var abs(Var a) {
  Tensor out = a.value();
  for (double& v : out.values()) v = std::abs(v);
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    const Tensor& av = a.value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > 0.0) ga[i] += g[i];
      else if (av[i] < 0.0) ga[i] -= g[i];
    }
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.values()) v += c;
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Tensor& g) { tape.grad(a) += g; });
}

Var elementwise(Elementwise kind, std::span<const Var> operands, double factor) {
  const bool binary = kind == Elementwise::add || kind == Elementwise::sub || kind == Elementwise::mul;
  require(operands.size() == (binary ? 2u : 1u), "elementwise: wrong operand count");
  switch (kind) {
    case Elementwise::add: return add(operands[0], operands[1]);
    case Elementwise::sub: return sub(operands[0], operands[1]);
    case Elementwise::mul: return mul(operands[0], operands[1]);
    case Elementwise::relu: return relu(operands[0]);
    case Elementwise::scale: return scale(operands[0], factor);
    case Elementwise::abs: return abs(operands[0]);
  }
  throw ContractViolation("elementwise: unknown kind");
}

Var add_bias(Var a, Var bias) {
  const Tensor& av = a.value();
  require_matrix(av, "add_bias");
  const std::size_t rows = av.rows();
  const std::size_t cols = av.cols();
  if (bias.value().size() != cols) throw ContractViolation("add_bias: bias length " + std::to_string(bias.value().size()) +
                                           " does not match width " + std::to_string(cols));
  Tensor out = av;
  const Tensor& bv = bias.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) += bv[c];
  return a.tape().record(std::move(out), {a, bias}, [a, bias, rows, cols](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) tape.grad(a) += g;
    if (tape.requires_grad(bias)) {
      Tensor& gb = tape.grad(bias);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
    }
  });
}

Var mul_constant(Var a, const Tensor& factors) {
  require(factors.size() == a.value().size(), "mul_constant: size mismatch");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factors[i];
  return a.tape().record(std::move(out), {a}, [a, factors](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factors[i];
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  require(!parts.empty(), "concat: empty part list");
  require(axis < 2, "concat: axis must be 0 or 1");
  for (const Var& p : parts) require_matrix(p.value(), "concat");
  const std::size_t other = 1 - axis;
  const std::size_t fixed = parts[0].value().dim(other);
  std::size_t total = 0;
  for (const Var& p : parts) {
    require(p.value().dim(other) == fixed, "concat: parts disagree on the non-concatenated axis");
    total += p.value().dim(axis);
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  Tensor out(Shape{rows, cols});
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    offsets.push_back(offset);
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < pv.rows(); ++r)
      for (std::size_t c = 0; c < pv.cols(); ++c) {
        if (axis == 0) out(offset + r, c) = pv(r, c);
        else out(r, offset + c) = pv(r, c);
      }
    offset += pv.dim(axis);
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), inputs, [inputs, offsets, axis](Tape& tape, const Tensor& g) {
    const std::size_t gcols = g.cols();
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (!tape.requires_grad(inputs[k])) continue;
      Tensor& gp = tape.grad(inputs[k]);
      const std::size_t pr = gp.rows(), pc = gp.cols();
      for (std::size_t r = 0; r < pr; ++r)
        for (std::size_t c = 0; c < pc; ++c)
          gp(r, c) += axis == 0 ? g[(offsets[k] + r) * gcols + c] : g[r * gcols + offsets[k] + c];
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_matrix(av, "slice");
  require(axis < 2, "slice: axis must be 0 or 1");
  require(begin <= end && end <= av.dim(axis), "slice: range out of bounds");
  const std::size_t rows = axis == 0 ? end - begin : av.rows();
  const std::size_t cols = axis == 0 ? av.cols() : end - begin;
  const std::size_t r0 = axis == 0 ? begin : 0;
  const std::size_t c0 = axis == 0 ? 0 : begin;
  Tensor out(Shape{rows, cols});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = av(r0 + r, c0 + c);
  return a.tape().record(std::move(out), {a}, [a, r0, c0](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r0 + r, c0 + c) += g(r, c);
  });
}

Var reduce_sum(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  require_matrix(av, "reduce_sum");
  require(axis < 2, "reduce_sum: axis must be 0 or 1");
  const std::size_t rows = av.rows(), cols = av.cols();
  Tensor out(axis == 0 ? Shape{1, cols} : Shape{rows, 1});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[axis == 0 ? c : r] += av(r, c);
  return a.tape().record(std::move(out), {a}, [a, axis, rows, cols](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) ga(r, c) += g[axis == 0 ? c : r];
  });
}

Var sum_all(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape().record(Tensor::scalar(total), {a}, [a](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    for (double& v : ga.values()) v += g[0];
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value();
  out.reshape(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

}  // namespace dag
