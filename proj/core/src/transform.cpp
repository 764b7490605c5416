#include "dag/transform.hpp"

#include <cmath>
#include <sstream>

#include "dag/errors.hpp"
#include "dag/ops.hpp"

namespace dag {

namespace {

[[noreturn]] void throw_degenerate(std::size_t index, double r) {
  std::ostringstream msg;
  msg << "perspective transform is degenerate at landmark " << index << ": |r| = " << std::abs(r)
      << " <= " << kMinHomogeneousScale;
  throw DegenerateTransform(msg.str());
}

using Mat3 = std::array<double, 9>;

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) out[r * 3 + c] += a[r * 3 + k] * b[k * 3 + c];
  return out;
}

// [9 x 9] matrix C^T such that vec(S^-1 T S) = vec(T) * C^T for row vectors,
// where S maps pixels into the centered, width-normalized frame.
Tensor conjugation_matrix(double width, double height) {
  const double s = 1.0 / width;
  const double cx = width / 2.0, cy = height / 2.0;
  const Mat3 to_frame{s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1};
  const Mat3 from_frame{width, 0, cx, 0, width, cy, 0, 0, 1};
  Tensor ct(Shape{9, 9});
  for (std::size_t k = 0; k < 9; ++k) {
    Mat3 basis{};
    basis[k] = 1.0;
    const Mat3 mapped = mat_mul(mat_mul(from_frame, basis), to_frame);
    for (std::size_t j = 0; j < 9; ++j) ct(k, j) = mapped[j];
  }
  return ct;
}

}  // namespace

Point2 PerspectiveTransform::apply(Point2 p) const {
  const double r = m[6] * p.x + m[7] * p.y + m[8];
  if (!(std::abs(r) > kMinHomogeneousScale)) throw_degenerate(0, r);
  return Point2{(m[0] * p.x + m[1] * p.y + m[2]) / r, (m[3] * p.x + m[4] * p.y + m[5]) / r};
}

PerspectiveTransform operator*(const PerspectiveTransform& lhs, const PerspectiveTransform& rhs) {
  return PerspectiveTransform{mat_mul(lhs.m, rhs.m)};
}

PerspectiveTransform vector_to_perspective(std::span<const double> theta) {
  if (theta.size() != 9) throw ContractViolation("vector_to_perspective: expected 9 values, got " + std::to_string(theta.size()));
  PerspectiveTransform t;
  std::copy(theta.begin(), theta.end(), t.m.begin());
  return t;
}

PerspectiveTransform vector_to_affine(std::span<const double> theta) {
  if (theta.size() != 6) throw ContractViolation("vector_to_affine: expected 6 values, got " + std::to_string(theta.size()));
  PerspectiveTransform t;
  std::copy(theta.begin(), theta.end(), t.m.begin());
  t.m[6] = 0.0;
  t.m[7] = 0.0;
  t.m[8] = 1.0;
  return t;
}

LandmarkSet apply_perspective(const PerspectiveTransform& m, const LandmarkSet& landmarks) {
  LandmarkSet out;
  out.points.reserve(landmarks.size());
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    const Point2 p = landmarks[i];
    const double r = m.m[6] * p.x + m.m[7] * p.y + m.m[8];
    if (!(std::abs(r) > kMinHomogeneousScale)) throw_degenerate(i, r);
    out.points.push_back(Point2{(m.m[0] * p.x + m.m[1] * p.y + m.m[2]) / r, (m.m[3] * p.x + m.m[4] * p.y + m.m[5]) / r});
  }
  return out;
}

Var apply_perspective(Var transform, Var landmarks) {
  const Tensor& t = transform.value();
  const Tensor& v = landmarks.value();
  require(t.size() == 9, "apply_perspective: transform must hold 9 values");
  require(v.rank() == 2 && v.cols() == 2, "apply_perspective: landmarks must be [N x 2]");
  const std::size_t n = v.rows();
  Tensor out(Shape{n, 2});
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = v(i, 0), y = v(i, 1);
    r[i] = t[6] * x + t[7] * y + t[8];
    if (!(std::abs(r[i]) > kMinHomogeneousScale)) throw_degenerate(i, r[i]);
    out(i, 0) = (t[0] * x + t[1] * y + t[2]) / r[i];
    out(i, 1) = (t[3] * x + t[4] * y + t[5]) / r[i];
  }
  Tensor mapped = out;
  return landmarks.tape().record(
      std::move(out), {transform, landmarks},
      [transform, landmarks, r = std::move(r), mapped = std::move(mapped), n](Tape& tape, const Tensor& g) {
        const Tensor& t = transform.value();
        const Tensor& v = landmarks.value();
        const bool want_t = tape.requires_grad(transform);
        const bool want_v = tape.requires_grad(landmarks);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = v(i, 0), y = v(i, 1);
          const double xp = mapped(i, 0), yp = mapped(i, 1);
          const double gx = g(i, 0) / r[i], gy = g(i, 1) / r[i];
          if (want_t) {
            Tensor& gt = tape.grad(transform);
            gt[0] += gx * x;
            gt[1] += gx * y;
            gt[2] += gx;
            gt[3] += gy * x;
            gt[4] += gy * y;
            gt[5] += gy;
            const double back = -(gx * xp + gy * yp);
            gt[6] += back * x;
            gt[7] += back * y;
            gt[8] += back;
          }
          if (want_v) {
            Tensor& gv = tape.grad(landmarks);
            gv(i, 0) += gx * (t[0] - xp * t[6]) + gy * (t[3] - yp * t[6]);
            gv(i, 1) += gx * (t[1] - xp * t[7]) + gy * (t[4] - yp * t[7]);
          }
        }
      });
}

Var affine_to_homogeneous(Var affine6) {
  const Tensor& a = affine6.value();
  require(a.size() == 6, "affine_to_homogeneous: expected 6 values");
  Tensor out(Shape{1, 9});
  for (std::size_t k = 0; k < 6; ++k) out[k] = a[k];
  out[8] = 1.0;
  return affine6.tape().record(std::move(out), {affine6}, [affine6](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad(affine6);
    for (std::size_t k = 0; k < 6; ++k) ga[k] += g[k];
  });
}

std::vector<Parameter*> ReadoutHeadParams::parameters() {
  return {&hidden.weight, &hidden.bias, &output.weight, &output.bias};
}

ReadoutHeadParams make_readout_head(const std::string& name, std::size_t readout_width, std::size_t hidden,
                                    TransformKind kind, double frame_width, double frame_height,
                                    std::mt19937_64& rng) {
  require(frame_width > 0.0 && frame_height > 0.0, "make_readout_head: frame must be positive");
  ReadoutHeadParams head;
  head.kind = kind;
  head.frame_width = frame_width;
  head.frame_height = frame_height;
  head.hidden = make_affine(name + ".hidden", readout_width, hidden,
                            std::sqrt(2.0 / static_cast<double>(readout_width)), rng);
  head.output = make_affine(name + ".output", hidden, head.out_dim(), 0.0, rng);
  const std::array<double, 9> identity{1, 0, 0, 0, 1, 0, 0, 0, 1};
  for (std::size_t k = 0; k < head.out_dim(); ++k) head.output.bias.value[k] = identity[k];
  return head;
}

Var gin_readout(Tape& tape, std::span<const Var> layer_features, ReadoutHeadParams& params) {
  require(!layer_features.empty(), "gin_readout: no layer features");
  const std::size_t width = layer_features[0].value().cols();
  std::vector<Var> sums;
  sums.reserve(layer_features.size());
  for (const Var& f : layer_features) {
    require(f.value().rank() == 2 && f.value().cols() == width, "gin_readout: layer widths disagree");
    sums.push_back(reduce_sum(f, 0));
  }
  Var pooled = concat(sums, 1);
  if (pooled.value().cols() != params.hidden.in_width()) throw ContractViolation("gin_readout: readout width " + std::to_string(pooled.value().cols()) + " but head expects " +
              std::to_string(params.hidden.in_width()));
  Var raw = affine(tape, relu(affine(tape, pooled, params.hidden)), params.output);

  // Conjugate the offset from identity into pixel coordinates; identity itself
  // is added back exactly.
  const Tensor conj = conjugation_matrix(params.frame_width, params.frame_height);
  Tensor identity9(Shape{1, 9});
  identity9[0] = identity9[4] = identity9[8] = 1.0;
  if (params.kind == TransformKind::perspective) {
    Var delta = sub(raw, tape.constant(identity9));
    return add(matmul(delta, tape.constant(conj)), tape.constant(identity9));
  }
  Tensor identity6(Shape{1, 6});
  identity6[0] = identity6[4] = 1.0;
  Var delta = sub(raw, tape.constant(identity6));
  Tensor pad(Shape{6, 9});
  for (std::size_t k = 0; k < 6; ++k) pad(k, k) = 1.0;
  Var delta9 = matmul(matmul(delta, tape.constant(pad)), tape.constant(conj));
  return add(slice(delta9, 1, 0, 6), tape.constant(identity6));
}

}  // namespace dag
