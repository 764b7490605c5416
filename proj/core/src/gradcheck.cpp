#include "dag/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dag/errors.hpp"

namespace dag {

namespace {

double evaluate(const std::function<Var(Tape&)>& loss_fn) {
  Tape tape;
  const double value = loss_fn(tape).value()[0];
  require(std::isfinite(value), "finite_difference_check: loss is not finite");
  return value;
}

}  // namespace

GradCheckReport finite_difference_report(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                                         const GradCheckOptions& options) {
  require(options.step > 0.0, "finite_difference_check: step must be positive");
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = loss_fn(tape);
    require(std::isfinite(loss.value()[0]), "finite_difference_check: loss is not finite");
    tape.backward(loss);
  }

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    std::vector<std::size_t> coords(p->value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (p->train_mask) {
      std::erase_if(coords, [&](std::size_t i) { return (*p->train_mask)[i] == 0.0; });
    }
    if (options.max_coords_per_param != 0 && coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
    }
    for (std::size_t i : coords) {
      const double original = p->value[i];
      p->value[i] = original + options.step;
      const double plus = evaluate(loss_fn);
      p->value[i] = original - options.step;
      const double minus = evaluate(loss_fn);
      p->value[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p->grad[i];
      const double diff = std::abs(analytic - numeric);
      const double magnitude = std::abs(analytic) + std::abs(numeric);
      if (magnitude < options.denominator_floor) ++report.below_floor;
      report.max_relative_error = std::max(report.max_relative_error, diff / std::max(magnitude, options.denominator_floor));
      report.max_absolute_error = std::max(report.max_absolute_error, diff);
      ++report.coordinates;
    }
  }
  return report;
}

double finite_difference_check(const std::function<Var(Tape&)>& loss_fn, std::span<Parameter* const> params,
                               const GradCheckOptions& options) {
  return finite_difference_report(loss_fn, params, options).max_relative_error;
}

}  // namespace dag
