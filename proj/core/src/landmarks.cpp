#include "dag/landmarks.hpp"

#include "dag/errors.hpp"

namespace dag {

Tensor to_tensor(const LandmarkSet& landmarks) {
  Tensor t(Shape{landmarks.size(), 2});
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    t(i, 0) = landmarks[i].x;
    t(i, 1) = landmarks[i].y;
  }
  return t;
}

LandmarkSet landmarks_from_tensor(const Tensor& t) {
  if (!(t.rank() == 2 && t.cols() == 2)) throw ContractViolation("landmarks_from_tensor: expected [N x 2], got " + shape_string(t.shape()));
  LandmarkSet out;
  out.points.resize(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) out.points[i] = Point2{t(i, 0), t(i, 1)};
  return out;
}

}  // namespace dag
