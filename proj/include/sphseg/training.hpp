/* Copyright 2026 The sphseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Minibatch training with Adam and early stopping, and dataset evaluation.
#ifndef SPHSEG_TRAINING_HPP_
#define SPHSEG_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "sphseg/datagen.hpp"
#include "sphseg/network.hpp"

namespace sphseg {

struct EvalMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
  double miou = 0.0;                 // all classes present
  double miou_non_background = 0.0;  // NaN if no foreground class is present
  std::vector<double> class_iou;     // NaN for absent classes
};

/// Throws ShapeError unless the model is a segmentation model whose input and
/// output match the dataset.
void check_compatible(const Network& net, const DatasetHeader& header);

/// Pixel statistics pooled over all records (records evaluated in parallel).
EvalMetrics evaluate(const Network& net, std::span<const double> params, const Dataset& data);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  AdamConfig adam;
  int patience = 10;  // epochs without improvement of the early-stopping mIoU
  std::uint64_t seed = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's minibatches
  double miou = 0.0;        // non-background mIoU on the monitor set
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<double> params;  // best monitored epoch (or the last, if none)
  AdamState optimizer;         // state after the final epoch
  std::vector<EpochMetrics> history;
  int best_epoch = -1;
  bool stopped_early = false;
};

/// Mean loss and its gradient over a minibatch; kernels are built once and
/// samples run in parallel. Gradients are summed in index order.
LossResult batch_gradient(const Network& net, std::span<const double> params, const Dataset& data,
                          std::span<const std::size_t> batch, std::vector<double>* grad);

/// Trains from `init`. Early stopping monitors non-background mIoU on
/// `monitor` (the training set when null). `on_epoch` sees every epoch.
TrainResult train(const Network& net, std::vector<double> init, const Dataset& data, const Dataset* monitor,
                  const TrainConfig& cfg, const std::function<void(const EpochMetrics&)>& on_epoch = {},
                  AdamState optimizer = {});

}  // namespace sphseg

#endif  // SPHSEG_TRAINING_HPP_
