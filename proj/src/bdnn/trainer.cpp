#include "bdnn/trainer.hpp"

#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace ekey::bdnn {

namespace {

struct Example {
  Tensor input;
  int label;
};

std::vector<Example> prepare(const NetworkModel& model, const std::vector<AttributeSample>& data) {
  std::vector<Example> out;
  bool seen[2] = {false, false};
  for (const auto& s : data) {
    if (s.label == Label::Unlabeled) continue;
    if (s.kind != SampleKind::Image) {
      throw Error(ErrorCode::InvalidInput, "training sample '" + s.source_id + "' is not an image");
    }
    const int label = class_of(s.label);
    seen[label] = true;
    out.push_back({image_to_tensor(s.image, model.input_shape()), label});
  }
  if (!seen[0] || !seen[1]) {
    throw Error(ErrorCode::Training, "training set needs both positive and negative samples");
  }
  return out;
}

}  // namespace

NetworkModel train(const std::vector<AttributeSample>& dataset, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
  NetworkModel model = default_architecture(cfg.dropout_rate);
  model.initialize(cfg.seed);
  return train_from(std::move(model), dataset, cfg, on_epoch);
}

NetworkModel train_from(NetworkModel model, const std::vector<AttributeSample>& dataset,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
  if (cfg.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  if (!(cfg.binarization_lambda >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "binarization lambda must be non-negative");
  }
  for (auto& l : model.mutable_layers()) {
    if (l.type == LayerType::Dropout) l.rate = cfg.dropout_rate;
  }
  model.validate_for_keying();
  const std::vector<Example> examples = prepare(model, dataset);

  // Separate streams so changing the dropout rate does not reorder batches.
  Rng order_rng(cfg.seed ^ 0x5eed0001ULL);
  Rng dropout_rng(cfg.seed ^ 0x5eed0002ULL);

  Gradients grads(model);
  Gradients velocity(model);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Trace trace;

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.clear();
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = examples[order[k]];
        forward_pass(model, ex.input, Mode::Training, &dropout_rng, trace);
        const double loss = sample_loss(model, trace, ex.label, cfg.binarization_lambda);
        if (!std::isfinite(loss)) {
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", sample " << order[k]
              << " (lr=" << cfg.learning_rate << ", lambda=" << cfg.binarization_lambda << ")";
          throw Error(ErrorCode::Training, msg.str());
        }
        loss_sum += loss;
        const auto& p = trace.outputs.back().data;
        if ((p[1] >= p[0] ? 1 : 0) == ex.label) ++correct;
        backward(model, trace, ex.label, cfg.binarization_lambda, scale, grads);
      }
      auto& layers = model.mutable_layers();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto update = [&](std::vector<double>& param, const std::vector<double>& g,
                          std::vector<double>& v) {
          for (std::size_t j = 0; j < param.size(); ++j) {
            v[j] = cfg.momentum * v[j] - cfg.learning_rate * g[j];
            param[j] += v[j];
          }
        };
        update(layers[i].weights, grads.weights[i], velocity.weights[i]);
        update(layers[i].bias, grads.bias[i], velocity.bias[i]);
      }
    }
    if (on_epoch) {
      on_epoch({epoch + 1, loss_sum / static_cast<double>(examples.size()),
                static_cast<double>(correct) / static_cast<double>(examples.size())});
    }
  }
  model.round_to_float();
  return model;
}

}  // namespace ekey::bdnn
