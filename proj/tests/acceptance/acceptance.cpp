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
// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: sphseg_acceptance [scratch_dir]
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sphseg/datagen.hpp"
#include "sphseg/network.hpp"
#include "sphseg/profiler.hpp"
#include "sphseg/training.hpp"
#include "sphseg/transforms.hpp"
#include "sphseg/verify.hpp"

namespace {

using namespace sphseg;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

// ------------------------------------------------------------------ criteria

Outcome round_trips() {
  bool ok = true;
  std::string d;
  for (int L : {4, 8, 16}) {
    auto t0 = Clock::now();
    const double s2 = verify::s2_round_trip_error(L, 5, 100 + L);
    const double t_s2 = since(t0);
    t0 = Clock::now();
    const double so3 = verify::so3_round_trip_error(L, 5, 200 + L);
    const double t_so3 = since(t0);
    ok = ok && s2 < 1e-10 && so3 < 1e-10 && t_s2 < 60 && t_so3 < 60;
    d += fmt("L=%d S2 %.1e (%.2fs) SO3 %.1e (%.2fs); ", L, s2, t_s2, so3, t_so3);
  }
  return {ok, d + "need < 1e-10 and < 60 s"};
}

Outcome quadrature() {
  const double y = verify::s2_orthonormality_error(16);
  const double d = verify::so3_orthogonality_error(4);
  return {y < 1e-10 && d < 1e-9, fmt("Y l,l'<16: %.2e (< 1e-10); D l<=4: %.2e (< 1e-9)", y, d)};
}

Outcome oracles() {
  const double s2 = verify::conv_s2_oracle_error(6, 50, 3);
  const double so3 = verify::conv_so3_oracle_error(4, 50, 4);
  return {s2 < 1e-8 && so3 < 1e-7,
          fmt("50 probes each: lifting L=6 %.2e (< 1e-8), group L=4 %.2e (< 1e-7)", s2, so3)};
}

Outcome equivariance() {
  const double stack = verify::network_equivariance_error(8, false, 100, 5, /*median=*/false);
  const double layers = verify::conv_equivariance_error(8, 100, 6);
  const double final_layer = verify::final_layer_equivariance_error(8, 100, 7);
  std::vector<double> relu;
  for (int L : {8, 16, 32}) relu.push_back(verify::network_equivariance_error(L, true, 20, 8));
  const bool monotone = relu[1] <= relu[0] && relu[2] <= relu[1];
  return {stack < 1e-9 && layers < 1e-9 && final_layer < 1e-9 && monotone,
          fmt("linear stack %.1e, single layers %.1e, final layer %.1e (< 1e-9, 100 rotations); "
              "ReLU medians L=8/16/32: %.3e %.3e %.3e (non-increasing)",
              stack, layers, final_layer, relu[0], relu[1], relu[2])};
}

Outcome projection() {
  const double e = verify::final_projection_error(6, 50, 9);
  return {e < 1e-8, fmt("L=6, 50 points: %.2e (< 1e-8)", e)};
}

Outcome invariance() {
  const double e = verify::readout_invariance_error(6, 20, 10);
  return {e < 1e-10, fmt("20 rotations: max relative change %.2e (< 1e-10)", e)};
}

Outcome gradients() {
  double worst = 0.0;
  std::size_t checked = 0, excluded = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const verify::GradientCheck g = verify::gradient_check(verify::random_tiny_spec(1000 + s), 2000 + s);
    worst = std::max(worst, g.max_rel_error);
    checked += g.checked;
    excluded += g.excluded;
  }
  return {worst < 1e-5, fmt("20 models at L=6, h=1e-5: max relative error %.2e (< 1e-5); %zu coordinates, "
                            "%zu excluded at ReLU kinks",
                            worst, checked, excluded)};
}

Outcome sampler() {
  const verify::SamplerCheck c = verify::sampler_check(SamplerConfig{}, 100, 11);
  return {c.chain_valid == 100 && c.in_range == 100 && c.max_beta_l_spread < 1e-14,
          fmt("%d/100 chain-valid, %d/100 in [190000, 210000], max relative beta*L spread %.1e", c.chain_valid,
              c.in_range, c.max_beta_l_spread)};
}

// Desk-scale model: 3 layers at L=16 with the kernel support fixed in grid
// cells (beta_hat * b constant).
ModelSpec desk_model() {
  const double beta_ref = 0.15 * kPi;
  auto layer = [&](LayerKind k, int ni, int no, int bi, int bo) {
    LayerSpec l;
    l.kind = k;
    l.in_channels = ni;
    l.out_channels = no;
    l.in_bandlimit = bi;
    l.out_bandlimit = bo;
    l.beta_hat = 16.0 / bi * beta_ref;
    return l;
  };
  ModelSpec s;
  s.layers = {layer(LayerKind::kS2So3, 1, 8, 16, 12), layer(LayerKind::kSo3So3, 8, 6, 12, 12),
              layer(LayerKind::kSo3S2, 6, 11, 12, 16)};
  return s;
}

DataGenConfig desk_data(std::uint64_t seed, bool rotated) {
  DataGenConfig cfg;
  cfg.L = 16;
  cfg.seed = seed;
  cfg.rotated = rotated;
  cfg.angular_radius = kPi / 2;
  cfg.projection = ProjectionPoint::kGridCenter;
  return cfg;
}

Outcome desk_training() {
  const auto t0 = Clock::now();
  const Network net(desk_model());
  const std::vector<SourceImage> sources = synthetic_glyphs(1000, 7);
  const Dataset train_set = generate_dataset(desk_data(1, false), sources, 500);
  const Dataset test = generate_dataset(desk_data(2, false), sources, 200);
  const Dataset test_rotated = generate_dataset(desk_data(2, true), sources, 200);
  Rng rng(3);
  const std::vector<double> init = net.init_parameters(rng);
  const double loss0 = evaluate(net, init, train_set).loss;

  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_size = 8;
  tc.adam.lr = 1e-2;
  tc.patience = tc.epochs;  // run every epoch; the best monitored epoch is kept
  tc.seed = 4;
  const TrainResult r = train(net, init, train_set, nullptr, tc, [](const EpochMetrics& m) {
    std::fprintf(stderr, "  epoch %2d  loss %.4f  train mIoU %.4f  %.1fs\n", m.epoch, m.train_loss, m.miou,
                 m.seconds);
  });
  const double loss1 = evaluate(net, r.params, train_set).loss;
  const double reduction = 1.0 - loss1 / loss0;
  const double miou = evaluate(net, r.params, test).miou_non_background;
  const double miou_rot = evaluate(net, r.params, test_rotated).miou_non_background;
  const double gap = std::abs(miou - miou_rot) * 100.0;
  const double minutes = since(t0) / 60.0;
  return {reduction >= 0.5 && gap <= 3.0 && minutes <= 30.0 && net.num_parameters() <= 30000,
          fmt("%zu params, 30 epochs on 500 samples: training loss %.4f -> %.4f (%.1f%% reduction, need >= 50%%); "
              "non-background mIoU unrotated %.2f, rotated %.2f (gap %.2f points, need <= 3); %.1f min",
              net.num_parameters(), loss0, loss1, 100 * reduction, 100 * miou, 100 * miou_rot, gap, minutes)};
}

Outcome profiler() {
  const Network net(desk_model());
  Rng rng(5);
  const std::vector<double> params = net.init_parameters(rng);
  const Dataset d = generate_dataset(desk_data(6, true), synthetic_glyphs(20, 6), 2);
  std::vector<SphericalSignal> inputs;
  for (const DatasetRecord& r : d.records) inputs.push_back(r.signal);
  ProfileConfig pc;
  pc.batch = 2;
  const ProfileReport rep = profile_forward(net, params, inputs, pc);
  std::fputs(format_profile(rep).c_str(), stderr);
  double sum = 0.0;
  for (const LayerProfile& l : rep.layers) sum += l.fraction;
  const double ops = rep.op_fraction[0] + rep.op_fraction[1] + rep.op_fraction[2];
  const bool final_separate = rep.layers.size() == net.spec().layers.size() &&
                              rep.layers.back().name.find("SO3S2") != std::string::npos;
  return {std::abs(sum - 1.0) <= 0.005 && std::abs(ops - 1.0) <= 0.005 && final_separate && rep.iterations >= 30,
          fmt("%d iterations: layer fractions sum to %.4f%%; transform %.1f%%, block-multiply %.1f%%, pointwise "
              "%.1f%%; final layer '%s' %.1f%%",
              rep.iterations, 100 * sum, 100 * rep.op_fraction[0], 100 * rep.op_fraction[1],
              100 * rep.op_fraction[2], rep.layers.back().name.c_str(), 100 * rep.layers.back().fraction)};
}

Outcome reproducibility(const std::string& dir) {
  const verify::ReproducibilityCheck c = verify::pipeline_reproducibility(dir, 12);
  return {c.dataset_identical && c.model_identical,
          fmt("two single-threaded generate+train runs: dataset %s, model %s",
              c.dataset_identical ? "identical" : "DIFFERS", c.model_identical ? "identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string scratch =
      argc > 1 ? argv[1] : (std::filesystem::temp_directory_path() / "sphseg-acceptance").string();
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"transform round trips", round_trips},
      {"quadrature exactness", quadrature},
      {"oracle equivalence", oracles},
      {"equivariance", equivariance},
      {"projection identity", projection},
      {"invariance", invariance},
      {"gradients", gradients},
      {"sampler", sampler},
      {"desk-scale training", desk_training},
      {"profiler", profiler},
      {"reproducibility", [&] { return reproducibility(scratch); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("[%s] %2zu %-22s %s (%.1fs)\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str(), since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed (OpenMP threads: %d)\n", criteria.size(), failed, omp_get_max_threads());
  return failed == 0 ? 0 : 1;
}
