#include "bdnn/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ekey::bdnn {

namespace {

// Relu gates and pool winners; equal signatures mean the probe stayed on one
// smooth piece of the loss.
std::vector<std::uint32_t> signature(const NetworkModel& model, const Trace& trace) {
  std::vector<std::uint32_t> sig;
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].type == LayerType::Relu) {
      const Tensor& in = i == 0 ? trace.input : trace.outputs[i - 1];
      for (double v : in.data) sig.push_back(v > 0.0 ? 1u : 0u);
    } else if (layers[i].type == LayerType::Pool) {
      sig.insert(sig.end(), trace.argmax[i].begin(), trace.argmax[i].end());
    }
  }
  return sig;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradientCheckResult gradient_check(const NetworkModel& model, const Tensor& input, int label,
                                   double lambda, std::uint64_t mask_seed, double h) {
  Rng rng(mask_seed);
  Trace base;
  forward_pass(model, input, Mode::Training, &rng, base);
  const auto masks = base.masks;
  const auto base_sig = signature(model, base);

  Gradients grads(model);
  backward(model, base, label, lambda, 1.0, grads);

  GradientCheckResult result;
  NetworkModel probe = model;
  Tensor probe_input = input;
  Trace trace;

  auto evaluate = [&](double& out_loss) {
    forward_pass(probe, probe_input, Mode::Training, nullptr, trace, &masks);
    out_loss = sample_loss(probe, trace, label, lambda);
    return signature(probe, trace) == base_sig;
  };

  auto check = [&](double& coordinate, double analytic) {
    const double saved = coordinate;
    double plus = 0.0;
    double minus = 0.0;
    coordinate = saved + h;
    const bool smooth_plus = evaluate(plus);
    coordinate = saved - h;
    const bool smooth_minus = evaluate(minus);
    coordinate = saved;
    if (!smooth_plus || !smooth_minus) {
      ++result.skipped_kinks;
      return;
    }
    const double numeric = (plus - minus) / (2.0 * h);
    result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic, numeric));
    ++result.checked;
  };

  auto& layers = probe.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (std::size_t j = 0; j < layers[i].weights.size(); ++j)
      check(layers[i].weights[j], grads.weights[i][j]);
    for (std::size_t j = 0; j < layers[i].bias.size(); ++j)
      check(layers[i].bias[j], grads.bias[i][j]);
  }
  for (std::size_t j = 0; j < probe_input.data.size(); ++j)
    check(probe_input.data[j], grads.input.data[j]);
  return result;
}

}  // namespace ekey::bdnn
