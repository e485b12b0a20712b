#pragma once

#include <cstddef>
#include <cstdint>

#include "bdnn/network.hpp"

namespace ekey::bdnn {

struct GradientCheckResult {
  // max over checked coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6)
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  // Coordinates whose +-h probe crossed a Relu or max-pool switch point; the
  // loss is not differentiable there, so finite differences are meaningless.
  std::size_t skipped_kinks = 0;
};

// Compares backward() against central finite differences of sample_loss()
// for every weight, bias and input coordinate. Dropout runs in training mode
// with one mask set drawn from mask_seed and held fixed across probes.
GradientCheckResult gradient_check(const NetworkModel& model, const Tensor& input, int label,
                                   double lambda, std::uint64_t mask_seed = 7, double h = 1e-4);

}  // namespace ekey::bdnn
