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
#include "sphseg/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace sphseg {

void check_compatible(const Network& net, const DatasetHeader& header) {
  const ModelSpec& spec = net.spec();
  if (spec.head != Head::kSegmentation) throw ShapeError("training and evaluation need a segmentation model");
  const LayerSpec& first = spec.layers.front();
  const LayerSpec& last = spec.layers.back();
  if (first.in_bandlimit != header.L || first.in_channels != 1) {
    throw ShapeError("model expects input bandlimit " + std::to_string(first.in_bandlimit) + " with " +
                     std::to_string(first.in_channels) + " channel(s); dataset has L=" + std::to_string(header.L));
  }
  if (last.out_bandlimit != header.L || last.out_channels != header.num_classes) {
    throw ShapeError("model outputs " + std::to_string(last.out_channels) + " classes at L=" +
                     std::to_string(last.out_bandlimit) + "; dataset has " + std::to_string(header.num_classes) +
                     " classes at L=" + std::to_string(header.L));
  }
}

EvalMetrics evaluate(const Network& net, std::span<const double> params, const Dataset& data) {
  check_compatible(net, data.header);
  const auto kernels = net.make_kernels(params);
  const std::size_t n = data.records.size();
  if (n == 0) throw UndefinedMetricError("cannot evaluate an empty dataset");
  const std::size_t plane = data.records[0].mask.size();
  std::vector<std::uint8_t> pred(n * plane), truth(n * plane);
  std::vector<double> losses(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const DatasetRecord& r = data.records[i];
    const ForwardOutput out = net.forward(params, kernels, r.signal);
    losses[i] = softmax_xent_loss(out.logits, r.mask).loss;
    const auto p = argmax_channels(out.logits);
    std::copy(p.begin(), p.end(), pred.begin() + i * plane);
    std::copy(r.mask.begin(), r.mask.end(), truth.begin() + i * plane);
  }
  EvalMetrics m;
  const int C = data.header.num_classes;
  m.class_iou = class_iou(pred, truth, C);
  m.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(pred.size());
  m.miou = miou(pred, truth, C, false);
  try {
    m.miou_non_background = miou(pred, truth, C, true);
  } catch (const UndefinedMetricError&) {
    m.miou_non_background = std::nan("");
  }
  return m;
}

LossResult batch_gradient(const Network& net, std::span<const double> params, const Dataset& data,
                          std::span<const std::size_t> batch, std::vector<double>* grad) {
  const auto kernels = net.make_kernels(params);
  const std::size_t b = batch.size();
  std::vector<double> losses(b);
  std::vector<SpectralGradient> grads(grad != nullptr ? b : 0);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(b); ++i) {
    const DatasetRecord& r = data.records[batch[i]];
    Tape tape;
    const ForwardOutput out = net.forward(params, kernels, r.signal, grad != nullptr ? &tape : nullptr);
    LossResult l = softmax_xent_loss(out.logits, r.mask);
    losses[i] = l.loss;
    if (grad != nullptr) {
      ForwardOutput g;
      g.logits = std::move(l.grad);
      grads[i] = net.backward_spectral(params, tape, g);
    }
  }
  LossResult res;
  res.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(b);
  if (grad != nullptr) {
    SpectralGradient total;
    for (SpectralGradient& g : grads) total.accumulate(g);
    *grad = net.to_parameter_gradient(total);
    for (double& v : *grad) v /= static_cast<double>(b);
  }
  return res;
}

TrainResult train(const Network& net, std::vector<double> init, const Dataset& data, const Dataset* monitor,
                  const TrainConfig& cfg, const std::function<void(const EpochMetrics&)>& on_epoch,
                  AdamState optimizer) {
  check_compatible(net, data.header);
  if (monitor != nullptr) check_compatible(net, monitor->header);
  if (init.size() != net.num_parameters()) throw ShapeError("initial parameters do not match the model");
  if (cfg.batch_size < 1 || cfg.epochs < 0 || cfg.patience < 1) throw DomainError("invalid training config");
  if (data.records.empty()) throw DomainError("training set is empty");

  TrainResult res;
  res.params = init;
  res.optimizer = std::move(optimizer);
  std::vector<double> params = std::move(init);
  double best = -1.0;
  int since_best = 0;
  std::vector<std::size_t> order(data.records.size());
  std::vector<double> grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> batch(order.data() + s, e - s);
      loss_sum += batch_gradient(net, params, data, batch, &grad).loss;
      ++batches;
      adam_step(params, grad, res.optimizer, cfg.adam);
    }
    EpochMetrics m;
    m.epoch = epoch + 1;
    m.train_loss = loss_sum / batches;
    m.miou = evaluate(net, params, monitor != nullptr ? *monitor : data).miou_non_background;
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.history.push_back(m);
    if (on_epoch) on_epoch(m);
    if (!std::isnan(m.miou) && m.miou > best) {
      best = m.miou;
      res.best_epoch = m.epoch;
      res.params = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      res.stopped_early = true;
      break;
    }
  }
  if (res.best_epoch < 0) res.params = params;
  return res;
}

}  // namespace sphseg
