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

#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>

#include "sphseg/profiler.hpp"
#include "test_util.hpp"

namespace sphseg {
namespace {

LayerSpec make_layer(LayerKind kind, int ni, int no, int bi, int bo, double beta) {
  LayerSpec l;
  l.kind = kind;
  l.in_channels = ni;
  l.out_channels = no;
  l.in_bandlimit = bi;
  l.out_bandlimit = bo;
  l.beta_hat = beta;
  l.support = {3, 2, 3};
  return l;
}

ModelSpec small_model(int L, int classes) {
  ModelSpec s;
  s.layers = {make_layer(LayerKind::kS2So3, 1, 3, L, 4, 0.5), make_layer(LayerKind::kSo3So3, 3, 3, 4, 4, 0.6),
              make_layer(LayerKind::kSo3S2, 3, classes, 4, L, 0.6)};
  return s;
}

Dataset small_dataset(std::size_t n, std::uint64_t seed) {
  DataGenConfig cfg;
  cfg.L = 8;
  cfg.seed = seed;
  cfg.angular_radius = kPi / 2;
  return generate_dataset(cfg, synthetic_glyphs(20, 4), n);
}

TEST(Training, CompatibilityChecks) {
  const Dataset d = small_dataset(1, 1);
  EXPECT_NO_THROW(check_compatible(Network(small_model(8, 11)), d.header));
  EXPECT_THROW(check_compatible(Network(small_model(6, 11)), d.header), ShapeError);
  EXPECT_THROW(check_compatible(Network(small_model(8, 5)), d.header), ShapeError);
  ModelSpec cls;
  cls.head = Head::kClassification;
  cls.num_classes = 11;
  cls.layers = {make_layer(LayerKind::kS2So3, 1, 2, 8, 4, 0.5)};
  EXPECT_THROW(check_compatible(Network(cls), d.header), ShapeError);
}

TEST(Training, BatchGradientIsTheMeanOfSampleGradients) {
  const Network net(small_model(8, 11));
  const Dataset d = small_dataset(3, 2);
  Rng rng(5);
  const auto p = net.init_parameters(rng);
  const std::vector<std::size_t> batch{2, 0, 1};
  std::vector<double> g;
  const double loss = batch_gradient(net, p, d, batch, &g).loss;
  std::vector<double> want(p.size(), 0.0);
  double want_loss = 0.0;
  for (std::size_t i : batch) {
    Tape tape;
    const auto out = net.forward(p, d.records[i].signal, &tape);
    LossResult l = softmax_xent_loss(out.logits, d.records[i].mask);
    want_loss += l.loss / 3;
    ForwardOutput go;
    go.logits = l.grad;
    const auto gi = net.backward(p, tape, go);
    for (std::size_t j = 0; j < p.size(); ++j) want[j] += gi[j] / 3;
  }
  EXPECT_NEAR(loss, want_loss, 1e-14);
  EXPECT_LT(testing::max_abs_diff(g, want), 1e-14 * testing::max_abs(want));
}

TEST(Training, ZeroLearningRateKeepsParamsBitwise) {
  const Network net(small_model(8, 11));
  const Dataset d = small_dataset(5, 3);
  Rng rng(6);
  const auto p = net.init_parameters(rng);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 2;
  cfg.adam.lr = 0.0;
  const TrainResult r = train(net, p, d, nullptr, cfg);
  EXPECT_EQ(r.params, p);
  EXPECT_EQ(r.optimizer.step, 6);
}

TEST(Training, EarlyStoppingHonoursPatience) {
  const Network net(small_model(8, 11));
  const Dataset d = small_dataset(4, 3);
  Rng rng(6);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.adam.lr = 0.0;
  cfg.patience = 2;
  const TrainResult r = train(net, net.init_parameters(rng), d, nullptr, cfg);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.history.size(), 3u);
}

TEST(Training, ReducesLossAndIsReproducible) {
  const Network net(small_model(8, 11));
  const Dataset d = small_dataset(8, 4);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.adam.lr = 1e-2;
  cfg.seed = 3;
  Rng a(9), b(9);
  const TrainResult r1 = train(net, net.init_parameters(a), d, nullptr, cfg);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(3);
  const TrainResult r2 = train(net, net.init_parameters(b), d, nullptr, cfg);
  omp_set_num_threads(saved);
  EXPECT_EQ(r1.params, r2.params);
  EXPECT_EQ(r1.optimizer, r2.optimizer);
  EXPECT_LT(r1.history.back().train_loss, 0.5 * r1.history.front().train_loss);
}

TEST(Evaluate, PerfectBackgroundPredictionScoresOne) {
  Dataset d = small_dataset(2, 5);
  for (DatasetRecord& r : d.records) std::fill(r.mask.begin(), r.mask.end(), 0);
  const Network net(small_model(8, 11));
  std::vector<double> p(net.num_parameters(), 0.0);
  p[net.layer_offset(2) + net.basis(2).weight_count()] = 5.0;  // bias of class 0
  const EvalMetrics m = evaluate(net, p, d);
  EXPECT_EQ(m.miou, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_TRUE(std::isnan(m.miou_non_background));
  EXPECT_THROW(evaluate(net, p, Dataset{d.header, {}}), UndefinedMetricError);
}

TEST(Profiler, FractionsSumToOne) {
  const Network net(small_model(8, 11));
  Rng rng(7);
  const auto p = net.init_parameters(rng);
  const Dataset d = small_dataset(2, 6);
  const std::vector<SphericalSignal> inputs{d.records[0].signal, d.records[1].signal};
  ProfileConfig cfg;
  cfg.iterations = 30;
  cfg.batch = 2;
  const ProfileReport r = profile_forward(net, p, inputs, cfg);
  ASSERT_EQ(r.layers.size(), 3u);
  double sum = 0.0;
  for (const LayerProfile& l : r.layers) {
    sum += l.fraction;
    EXPECT_GT(l.mean_ms, 0.0);
    EXPECT_TRUE(std::isfinite(l.stderr_ms));
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(r.op_fraction[0] + r.op_fraction[1] + r.op_fraction[2], 1.0, 1e-12);
  EXPECT_EQ(r.layers[2].name, "2:SO3S2conv");
  EXPECT_LE(r.layer_total_ms, r.wall_ms * 1.0001);
  EXPECT_NE(format_profile(r).find("block-mul"), std::string::npos);
}

}  // namespace
}  // namespace sphseg
