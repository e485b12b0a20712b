#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bdnn/network.hpp"
#include "core/attribute.hpp"

namespace ekey::bdnn {

struct TrainConfig {
  std::uint32_t epochs = 30;
  std::uint32_t batch_size = 16;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double dropout_rate = 0.3;
  std::uint64_t seed = 1;
  // Weight of the mean a(1-a) saturation penalty on the key layer.
  double binarization_lambda = 1.0;
};

struct EpochStats {
  std::uint32_t epoch = 0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains a fresh default_architecture() on the Positive/Negative image samples
// (Unlabeled ones are skipped). Deterministic for a given config.seed.
// Throws Error{Training} for a single-class set or a non-finite loss.
NetworkModel train(const std::vector<AttributeSample>& dataset, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});

// Same, continuing from a caller-supplied (already initialized) model.
NetworkModel train_from(NetworkModel model, const std::vector<AttributeSample>& dataset,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Positive -> class 1, Negative -> class 0.
inline int class_of(Label label) { return label == Label::Positive ? 1 : 0; }

}  // namespace ekey::bdnn
