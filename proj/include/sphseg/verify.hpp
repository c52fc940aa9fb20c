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
// Property checks shared by the test suite, the acceptance binary and the
// `verify` command.
#ifndef SPHSEG_VERIFY_HPP_
#define SPHSEG_VERIFY_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sphseg/network.hpp"

namespace sphseg::verify {

/// Random model with at most three layers and bandlimits <= L, drawn from
/// `seed`. Covers both heads, all layer kinds and ReLU on or off.
ModelSpec random_tiny_spec(std::uint64_t seed, int L = 6);

struct GradientCheck {
  double max_rel_error = 0.0;  // max |analytic - numeric| / max |numeric|
  std::size_t checked = 0;
  std::size_t excluded = 0;  // coordinates whose +-h probes flip a ReLU
};

/// Central finite differences of the cross-entropy loss w.r.t. every
/// parameter. Coordinates where the perturbation moves a pre-activation across
/// zero are excluded: the loss is not differentiable there at scale h.
GradientCheck gradient_check(const ModelSpec& spec, std::uint64_t seed, double h = 1e-5);

// ---------------------------------------------------------------- properties
//
// Each returns the measured error; callers compare against their tolerance.

/// Largest relative L2 error of analyze(synthesize(f)) and
/// synthesize(analyze(x)) over `trials` random bandlimited signals.
double s2_round_trip_error(int L, int trials, std::uint64_t seed);
double so3_round_trip_error(int L, int trials, std::uint64_t seed);
/// |sum_l 8pi^2/(2l+1) |f^l|_F^2 - quadrature of |f|^2| / quadrature.
double so3_parseval_error(int L, std::uint64_t seed);
/// analyze(a f + b g) against a analyze(f) + b analyze(g), both groups.
double transform_linearity_error(int L, std::uint64_t seed);
/// Max difference between transforms run with 1 and `threads` threads, and
/// whether repeated runs at a fixed thread count are bitwise identical.
struct DeterminismCheck {
  double cross_thread_error = 0.0;
  bool bitwise_repeatable = false;
};
DeterminismCheck transform_determinism(int L, int threads, std::uint64_t seed);

/// max |<Y^l_m, Y^l'_m'> - delta| over all l, l' < L under the grid quadrature.
double s2_orthonormality_error(int L);
/// max |<D^l_mn, D^l'_m'n'> - delta 8pi^2/(2l+1)| over l, l' <= lmax.
double so3_orthogonality_error(int lmax);
/// max |D D^H - I| and max |D(g^-1) - D(g)^H| over l <= lmax and random g.
double wigner_unitarity_error(int lmax, int trials, std::uint64_t seed);
double wigner_inverse_law_error(int lmax, int trials, std::uint64_t seed);
/// max |d^T d - I| at degree `ell` over betas next to 0 and pi; infinite if
/// any entry is not finite.
double wigner_pole_stability_error(int ell);
/// Max |beta L - beta' L'| between support grids with equal beta_hat L.
double support_scaling_error();
/// p-value of a chi-square test that R v is uniform on S^2 (64 equal-area cells).
double haar_uniformity_p_value(int samples, std::uint64_t seed);

/// Fourier-domain convolutions against direct quadrature at `probes` random
/// rotations (fresh kernel and input per probe); relative L2 over all probes.
double conv_s2_oracle_error(int L, int probes, std::uint64_t seed);
double conv_so3_oracle_error(int L, int probes, std::uint64_t seed);
/// Final-layer spectrum evaluated at random points against the position-space
/// projection.
double final_projection_error(int L, int points, std::uint64_t seed);
/// Largest relative error of conv(kappa, rotate(f)) vs rotate(conv(kappa, f)).
double conv_equivariance_error(int L, int trials, std::uint64_t seed);
double final_layer_equivariance_error(int L, int trials, std::uint64_t seed);
/// Bilinearity of every op in (kappa, f).
double op_linearity_error(int L, std::uint64_t seed);

/// Segmentation network at bandlimit L used by the equivariance checks: three
/// layers, fixed beta_hat and channel widths, weights drawn from `seed`.
ModelSpec equivariance_probe_spec(int L, bool relu);
/// Median (over `rotations`) relative error between forward(rotate(x)) and
/// rotate(forward(x)); the input is bandlimited to 6 so it is the same function
/// at every L. Rotations and weights depend on the seed only.
double network_equivariance_error(int L, bool relu, int rotations, std::uint64_t seed, bool median = true);
/// Max relative change of the invariant readout of a linear classification
/// network under `rotations` random input rotations.
double readout_invariance_error(int L, int rotations, std::uint64_t seed);

struct SamplerCheck {
  int sampled = 0;
  int chain_valid = 0;
  int in_range = 0;
  double max_beta_l_spread = 0.0;  // max over models of max |b_i beta_i - b_0 beta_0|
};
SamplerCheck sampler_check(const SamplerConfig& cfg, int models, std::uint64_t seed);

/// Relative L2 between generating with rotation R and rotating the unrotated
/// projection spectrally, for a smooth canvas at L; max over `trials`.
double datagen_rotation_error(int L, int trials, std::uint64_t seed);
/// Records violating mask < num_classes or a background fraction in (0, 1).
int datagen_mask_violations(int L, int records, std::uint64_t seed);

/// Generates a dataset and trains a tiny model twice in `dir` with one thread
/// and compares the written files byte for byte.
struct ReproducibilityCheck {
  bool dataset_identical = false;
  bool model_identical = false;
};
ReproducibilityCheck pipeline_reproducibility(const std::string& dir, std::uint64_t seed);

// -------------------------------------------------------------------- suites

enum class Level { kQuick, kFull };
Level parse_level(const std::string& s);

struct CheckResult {
  std::string module;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteConfig {
  Level level = Level::kQuick;
  double tolerance_scale = 1.0;  // multiplies every error tolerance
  std::uint64_t seed = 2026;
  std::string scratch_dir = ".";  // files written by the reproducibility check
};

/// Runs the property list of every module. "quick" uses small sizes; "full"
/// uses the documented sizes. `on_result` sees each result as it completes.
std::vector<CheckResult> run_suites(const SuiteConfig& cfg,
                                    const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace sphseg::verify

#endif  // SPHSEG_VERIFY_HPP_
