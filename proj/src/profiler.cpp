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
#include "sphseg/profiler.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>

namespace sphseg {

const char* op_category_name(OpCategory c) {
  switch (c) {
    case OpCategory::kTransform:
      return "transform";
    case OpCategory::kBlockMultiply:
      return "block-multiply";
    case OpCategory::kPointwise:
      return "pointwise";
  }
  return "?";
}

ProfileReport profile_forward(const Network& net, std::span<const double> params,
                              std::span<const SphericalSignal> inputs, const ProfileConfig& cfg) {
  if (cfg.iterations < 2) throw DomainError("profiling needs at least 2 iterations");
  if (cfg.batch < 1 || cfg.threads < 1 || cfg.warmup < 0) throw DomainError("invalid profile config");
  if (inputs.empty()) throw DomainError("profiling needs at least one input");
  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(cfg.threads);

  const std::size_t nl = net.spec().layers.size();
  std::vector<std::vector<double>> per_iter(nl);
  std::vector<std::array<double, 3>> op_sum(nl, std::array<double, 3>{});
  double wall_sum = 0.0;
  for (int it = -cfg.warmup; it < cfg.iterations; ++it) {
    LayerTimings t;
    t.seconds.assign(nl, std::array<double, 3>{});
    const auto start = std::chrono::steady_clock::now();
    for (int b = 0; b < cfg.batch; ++b) net.forward(params, inputs[b % inputs.size()], nullptr, &t);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (it < 0) continue;
    wall_sum += wall;
    for (std::size_t l = 0; l < nl; ++l) {
      per_iter[l].push_back(1e3 * (t.seconds[l][0] + t.seconds[l][1] + t.seconds[l][2]));
      for (int c = 0; c < 3; ++c) op_sum[l][c] += 1e3 * t.seconds[l][c];
    }
  }
  omp_set_num_threads(saved_threads);

  ProfileReport r;
  r.threads = cfg.threads;
  r.iterations = cfg.iterations;
  r.warmup = cfg.warmup;
  r.batch = cfg.batch;
  r.wall_ms = 1e3 * wall_sum / cfg.iterations;
  std::array<double, 3> op_total{};
  for (std::size_t l = 0; l < nl; ++l) {
    LayerProfile p;
    p.name = std::to_string(l) + ":" + layer_kind_name(net.spec().layers[l].kind);
    const auto& v = per_iter[l];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= (v.size() - 1);
    p.mean_ms = mean;
    p.stderr_ms = std::sqrt(var / v.size());
    for (int c = 0; c < 3; ++c) {
      p.op_ms[c] = op_sum[l][c] / cfg.iterations;
      op_total[c] += p.op_ms[c];
    }
    r.layer_total_ms += mean;
    r.layers.push_back(p);
  }
  for (LayerProfile& p : r.layers) p.fraction = r.layer_total_ms > 0 ? p.mean_ms / r.layer_total_ms : 0.0;
  const double ops = op_total[0] + op_total[1] + op_total[2];
  for (int c = 0; c < 3; ++c) r.op_fraction[c] = ops > 0 ? op_total[c] / ops : 0.0;
  return r;
}

std::string format_profile(const ProfileReport& r) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %12s %10s %9s %10s %10s %10s\n", "layer", "latency ms", "+- ms", "fraction",
                "transform", "block-mul", "pointwise");
  out += line;
  for (const LayerProfile& p : r.layers) {
    const double t = p.op_ms[0] + p.op_ms[1] + p.op_ms[2];
    auto pct = [&](int c) { return t > 0 ? 100.0 * p.op_ms[c] / t : 0.0; };
    std::snprintf(line, sizeof line, "%-16s %12.3f %10.3f %8.2f%% %9.1f%% %9.1f%% %9.1f%%\n", p.name.c_str(),
                  p.mean_ms, p.stderr_ms, 100.0 * p.fraction, pct(0), pct(1), pct(2));
    out += line;
  }
  std::snprintf(line, sizeof line, "%-16s %12.3f %10s %8.2f%% %9.1f%% %9.1f%% %9.1f%%\n", "total", r.layer_total_ms,
                "", 100.0, 100.0 * r.op_fraction[0], 100.0 * r.op_fraction[1], 100.0 * r.op_fraction[2]);
  out += line;
  std::snprintf(line, sizeof line, "wall %.3f ms/iteration, %d iterations after %d warm-up, batch %d, %d thread(s)\n",
                r.wall_ms, r.iterations, r.warmup, r.batch, r.threads);
  out += line;
  return out;
}

}  // namespace sphseg
