#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "dag/autodiff.hpp"

namespace dag {

struct GradCheckOptions {
  double step = 1e-6;
  /// Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
  /// Lower bound on the relative-error denominator. Central differences carry
  /// roughly eps*|loss|/step of rounding noise, so gradients far below that
  /// cannot be resolved to a relative tolerance.
  double denominator_floor = 1e-12;
};

struct GradCheckReport {
  /// Max over coordinates of |analytic - numeric| / max(|analytic| + |numeric|, floor).
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates = 0;
  /// Coordinates whose |analytic| + |numeric| fell below the floor.
  std::size_t below_floor = 0;
};

/// Compares reverse-mode gradients of `loss_fn` against central differences.
/// `loss_fn` must build a fresh scalar on the given tape each call.
GradCheckReport finite_difference_report(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                                         const GradCheckOptions& options = {});

/// Shorthand for finite_difference_report(...).max_relative_error.
double finite_difference_check(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                               const GradCheckOptions& options = {});

}  // namespace dag
