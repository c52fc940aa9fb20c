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
// Property suites run by `sphseg verify`.
#include <chrono>
#include <cstdio>
#include <string>
#include <tuple>

#include "sphseg/datagen.hpp"
#include "sphseg/verify.hpp"

namespace sphseg::verify {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Runner {
 public:
  Runner(const SuiteConfig& cfg, const std::function<void(const CheckResult&)>& on_result)
      : cfg_(cfg), on_result_(on_result) {}

  bool full() const { return cfg_.level == Level::kFull; }
  double tol(double t) const { return t * cfg_.tolerance_scale; }
  std::uint64_t seed(std::uint64_t k) const { return derive_seed(cfg_.seed, k); }

  /// Error check: passes when measure() < tolerance * tolerance_scale.
  template <class F>
  void below(const char* module, const char* name, double tolerance, F measure, std::string detail = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.module = module;
    r.name = name;
    r.tolerance = tolerance * cfg_.tolerance_scale;
    r.measured = measure();
    r.passed = r.measured < r.tolerance;
    r.detail = std::move(detail);
    finish(r, t0);
  }

  /// Boolean check with a measured value for the report.
  template <class F>
  void holds(const char* module, const char* name, F measure) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.module = module;
    r.name = name;
    std::tie(r.passed, r.measured, r.detail) = measure();
    finish(r, t0);
  }

  std::vector<CheckResult> results;

 private:
  void finish(CheckResult& r, std::chrono::steady_clock::time_point t0) {
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(r);
    if (on_result_) on_result_(r);
  }

  SuiteConfig cfg_;
  const std::function<void(const CheckResult&)>& on_result_;
};

void repr_kernels(Runner& run) {
  const int trials = run.full() ? 100 : 10;
  run.below("repr_kernels", "unitarity l<=8", 1e-11, [&] { return wigner_unitarity_error(8, trials, run.seed(1)); });
  run.below("repr_kernels", "inverse law l<=8", 1e-11, [&] { return wigner_inverse_law_error(8, trials, run.seed(2)); });
  const int L = run.full() ? 16 : 8;
  run.below("repr_kernels", "Y orthonormality", 1e-10, [&] { return s2_orthonormality_error(L); },
            "L=" + std::to_string(L));
  const int ell = run.full() ? 64 : 32;
  run.below("repr_kernels", "d stability near poles", 1e-8, [&] { return wigner_pole_stability_error(ell); },
            "l=" + std::to_string(ell));
}

void grid(Runner& run) {
  for (int L : {2, 4, 8, 16}) {
    if (L == 16 && !run.full()) break;
    run.below("grid", "quadrature exactness", 1e-10, [&] { return s2_orthonormality_error(L); },
              "L=" + std::to_string(L));
  }
  run.below("grid", "SO(3) Wigner orthogonality l<=4", 1e-9, [] { return so3_orthogonality_error(4); });
  run.below("grid", "beta*L conservation", 1e-12, [] { return support_scaling_error(); });
  const int n = run.full() ? 100000 : 20000;
  run.holds("grid", "Haar uniformity", [&] {
    const double p = haar_uniformity_p_value(n, run.seed(3));
    return std::tuple{p > 0.01, p, "p-value, n=" + std::to_string(n) + ", need > 0.01"};
  });
}

void transforms(Runner& run) {
  for (int L : {4, 8, 16}) {
    if (L == 16 && !run.full()) break;
    const std::string d = "L=" + std::to_string(L);
    run.below("transforms", "S2 round trip", 1e-10, [&] { return s2_round_trip_error(L, 3, run.seed(10 + L)); }, d);
    run.below("transforms", "SO3 round trip", 1e-10, [&] { return so3_round_trip_error(L, 3, run.seed(20 + L)); },
              d);
  }
  run.below("transforms", "SO3 Parseval", 1e-9, [&] { return so3_parseval_error(8, run.seed(4)); });
  run.below("transforms", "linearity", 1e-12, [&] { return transform_linearity_error(8, run.seed(5)); });
  run.holds("transforms", "determinism", [&] {
    const DeterminismCheck d = transform_determinism(run.full() ? 12 : 6, 4, run.seed(6));
    return std::tuple{d.bitwise_repeatable && d.cross_thread_error < run.tol(1e-12), d.cross_thread_error,
                      std::string(d.bitwise_repeatable ? "bitwise repeatable" : "NOT bitwise repeatable") +
                          "; 1 vs 4 threads"};
  });
}

void equivariant_ops(Runner& run) {
  const int probes = run.full() ? 50 : 10;
  run.below("equivariant_ops", "lifting conv vs quadrature", 1e-8,
            [&] { return conv_s2_oracle_error(6, probes, run.seed(7)); }, "L=6");
  run.below("equivariant_ops", "group conv vs quadrature", 1e-7,
            [&] { return conv_so3_oracle_error(4, probes, run.seed(8)); }, "L=4");
  run.below("equivariant_ops", "final layer vs projection", 1e-8,
            [&] { return final_projection_error(6, run.full() ? 20 : 5, run.seed(9)); }, "L=6");
  const int trials = run.full() ? 100 : 10;
  run.below("equivariant_ops", "conv equivariance", 1e-9, [&] { return conv_equivariance_error(8, trials, run.seed(10)); },
            "L=8");
  run.below("equivariant_ops", "final-layer equivariance", 1e-9,
            [&] { return final_layer_equivariance_error(8, trials, run.seed(11)); }, "L=8");
  run.below("equivariant_ops", "bilinearity", 1e-12, [&] { return op_linearity_error(6, run.seed(12)); });
  run.below("equivariant_ops", "readout invariance", 1e-10,
            [&] { return readout_invariance_error(6, 20, run.seed(13)); });
}

void network(Runner& run) {
  const int seeds = run.full() ? 20 : 3;
  run.holds("network", "gradients vs finite differences", [&] {
    double worst = 0.0;
    std::size_t excluded = 0, checked = 0;
    for (int s = 0; s < seeds; ++s) {
      const GradientCheck g = gradient_check(random_tiny_spec(run.seed(100 + s)), run.seed(200 + s));
      worst = std::max(worst, g.max_rel_error);
      excluded += g.excluded;
      checked += g.checked;
    }
    return std::tuple{worst < run.tol(1e-5), worst,
                      std::to_string(seeds) + " models, " + std::to_string(checked) + " coords, " +
                          std::to_string(excluded) + " excluded at ReLU kinks"};
  });
  run.below("network", "linear-model equivariance", 1e-9,
            [&] { return network_equivariance_error(8, false, run.full() ? 100 : 10, run.seed(14), false); }, "L=8");
  run.holds("network", "ReLU equivariance non-increasing in L", [&] {
    std::vector<int> Ls = {8, 16};
    if (run.full()) Ls.push_back(32);
    std::string detail;
    double worst_rise = -1e300, prev = 1e300;
    for (int L : Ls) {
      const double e = network_equivariance_error(L, true, run.full() ? 20 : 5, run.seed(15));
      worst_rise = std::max(worst_rise, e - prev);
      prev = e;
      detail += (detail.empty() ? "" : ", ") + ("L=" + std::to_string(L) + ": " + fmt("%.3e", e));
    }
    return std::tuple{worst_rise <= 0.0, worst_rise, "medians " + detail};
  });
  run.holds("network", "sampler validity", [&] {
    const int models = run.full() ? 100 : 20;
    const SamplerCheck c = sampler_check(SamplerConfig{}, models, run.seed(16));
    const bool ok = c.chain_valid == models && c.in_range == models && c.max_beta_l_spread < 1e-14;
    return std::tuple{ok, c.max_beta_l_spread,
                      std::to_string(c.chain_valid) + "/" + std::to_string(models) + " valid, " +
                          std::to_string(c.in_range) + " in range; relative beta*L spread"};
  });
}

void datagen(Runner& run) {
  run.below("datagen", "rotation consistency", 0.05,
            [&] { return datagen_rotation_error(50, run.full() ? 3 : 1, run.seed(17)); }, "L=50, smooth canvas");
  run.holds("datagen", "mask closure", [&] {
    const int bad = datagen_mask_violations(16, run.full() ? 40 : 8, run.seed(18));
    return std::tuple{bad == 0, static_cast<double>(bad), std::string("records violating the mask contract")};
  });
  run.holds("datagen", "default threshold", [] {
    const int t = DataGenConfig{}.threshold;
    return std::tuple{t == 150, static_cast<double>(t), std::string("digit-like sources")};
  });
}

void cli(Runner& run, const std::string& dir) {
  run.holds("cli", "single-thread reproducibility", [&] {
    const ReproducibilityCheck c = pipeline_reproducibility(dir, run.seed(19));
    return std::tuple{c.dataset_identical && c.model_identical, 0.0,
                      std::string("dataset ") + (c.dataset_identical ? "identical" : "DIFFERS") + ", model " +
                          (c.model_identical ? "identical" : "DIFFERS")};
  });
}

}  // namespace

Level parse_level(const std::string& s) {
  if (s == "quick") return Level::kQuick;
  if (s == "full") return Level::kFull;
  throw DomainError("unknown verify level '" + s + "' (quick, full)");
}

std::vector<CheckResult> run_suites(const SuiteConfig& cfg, const std::function<void(const CheckResult&)>& on_result) {
  if (!(cfg.tolerance_scale > 0.0)) throw DomainError("tolerance scale must be positive");
  Runner run(cfg, on_result);
  repr_kernels(run);
  grid(run);
  transforms(run);
  equivariant_ops(run);
  network(run);
  datagen(run);
  cli(run, cfg.scratch_dir);
  return run.results;
}

}  // namespace sphseg::verify
