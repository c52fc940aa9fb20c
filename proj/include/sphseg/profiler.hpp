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
// Per-layer forward latency with a breakdown into transforms, spectral block
// products and pointwise work.
#ifndef SPHSEG_PROFILER_HPP_
#define SPHSEG_PROFILER_HPP_

#include <array>
#include <string>
#include <vector>

#include "sphseg/network.hpp"

namespace sphseg {

struct LayerProfile {
  std::string name;  // e.g. "2:SO3conv"
  double mean_ms = 0.0;
  double stderr_ms = 0.0;
  double fraction = 0.0;               // of the summed layer time
  std::array<double, 3> op_ms{};       // mean per OpCategory
};

struct ProfileReport {
  int threads = 1;
  int iterations = 0;
  int warmup = 0;
  int batch = 0;
  std::vector<LayerProfile> layers;
  std::array<double, 3> op_fraction{};  // transform, block-multiply, pointwise
  double layer_total_ms = 0.0;          // mean of the summed per-layer times
  double wall_ms = 0.0;                 // mean wall time per iteration
};

struct ProfileConfig {
  int iterations = 30;
  int warmup = 3;
  int batch = 1;
  int threads = 1;
};

/// Times `cfg.iterations` forward passes over `cfg.batch` inputs after
/// `cfg.warmup` untimed passes, with OpenMP pinned to `cfg.threads`.
ProfileReport profile_forward(const Network& net, std::span<const double> params,
                              std::span<const SphericalSignal> inputs, const ProfileConfig& cfg);

/// Fixed-width table in the style of a per-layer latency breakdown.
std::string format_profile(const ProfileReport& report);

const char* op_category_name(OpCategory c);

}  // namespace sphseg

#endif  // SPHSEG_PROFILER_HPP_
