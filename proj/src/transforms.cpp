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
#include "sphseg/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "plans.hpp"
#include "sphseg/grid.hpp"
#include "sphseg/wigner.hpp"

namespace sphseg {
namespace detail {

std::shared_ptr<const S2Plan> s2_plan(int L) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const S2Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(L);
  if (it != cache.end()) return it->second;

  auto plan = std::make_shared<S2Plan>();
  const S2Grid grid = make_s2_grid(Bandlimit(L));
  plan->L = L;
  plan->thetas = grid.thetas;
  plan->ring_weights = grid.weights;
  plan->legendre.resize(2 * L);
  for (int j = 0; j < 2 * L; ++j) plan->legendre[j] = legendre_table(L, grid.thetas[j]);
  cache.emplace(L, plan);
  return plan;
}

std::shared_ptr<const So3Plan> so3_plan(int L) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const So3Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(L);
  if (it != cache.end()) return it->second;

  auto plan = std::make_shared<So3Plan>();
  const So3Grid grid = make_so3_grid(Bandlimit(L));
  plan->L = L;
  plan->betas = grid.betas;
  plan->beta_weights = grid.weights;
  plan->wigner_d.resize(2 * L);
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < 2 * L; ++j) plan->wigner_d[j] = wigner_d_table(L, grid.betas[j]);
  cache.emplace(L, plan);
  return plan;
}

}  // namespace detail

namespace {

using detail::S2Plan;
using detail::So3Plan;

// ---------------------------------------------------------------- DFT plans

// FFTW plans for length-n lines and n x n slices, created once per n. The
// planner is not thread-safe; fftw_execute_dft on distinct buffers is.
struct DftPlans {
  fftw_plan fwd1 = nullptr;  // exp(-2 pi i jk / n)
  fftw_plan bwd1 = nullptr;  // exp(+2 pi i jk / n)
  fftw_plan fwd2 = nullptr;
  fftw_plan bwd2 = nullptr;
};

const DftPlans& dft_plans(int n) {
  static std::mutex mu;
  static std::map<int, DftPlans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const std::size_t sz = static_cast<std::size_t>(n) * n;
  auto* in = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * sz));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * sz));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  DftPlans p;
  p.fwd1 = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, flags);
  p.bwd1 = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, flags);
  p.fwd2 = fftw_plan_dft_2d(n, n, in, out, FFTW_FORWARD, flags);
  p.bwd2 = fftw_plan_dft_2d(n, n, in, out, FFTW_BACKWARD, flags);
  fftw_free(in);
  fftw_free(out);
  return cache.emplace(n, p).first->second;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

// Index of frequency m in an unshifted length-n DFT.
inline int wrap(int m, int n) { return m < 0 ? m + n : m; }

// ---------------------------------------------------------------- S^2 kernels

// out^l_m = sum_j w_j y^l_m(theta_j) sum_k f(j, k) exp(-i m phi_k).
// `weighted == false` uses unit ring weights (the synthesis transpose).
template <class T>
S2Spectrum s2_forward(const S2Field<T>& sig, bool weighted) {
  const int L = sig.L.value();
  const int n = 2 * L;
  const int M = 2 * L - 1;
  const auto plan = detail::s2_plan(L);
  const DftPlans& dft = dft_plans(n);
  S2Spectrum out(sig.L, sig.channels);
  std::vector<Complex> F(static_cast<std::size_t>(n) * M);

  for (int c = 0; c < sig.channels; ++c) {
#pragma omp parallel
    {
      std::vector<Complex> x(n), y(n);
#pragma omp for schedule(static)
      for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) x[k] = sig.at(c, j, k);
        fftw_execute_dft(dft.fwd1, as_fftw(x.data()), as_fftw(y.data()));
        const double w = weighted ? plan->ring_weights[j] : 1.0;
        for (int m = -(L - 1); m <= L - 1; ++m) F[static_cast<std::size_t>(j) * M + (m + L - 1)] = y[wrap(m, n)] * w;
      }
    }
    Complex* dst = out.channel(c);
#pragma omp parallel for schedule(dynamic)
    for (int m = -(L - 1); m <= L - 1; ++m) {
      for (int l = std::abs(m); l < L; ++l) {
        const std::size_t idx = s2_index(l, m);
        Complex acc = 0.0;
        for (int j = 0; j < n; ++j) acc += plan->legendre[j][idx] * F[static_cast<std::size_t>(j) * M + (m + L - 1)];
        dst[idx] = acc;
      }
    }
  }
  return out;
}

// f(j, k) = w_j sum_m exp(i m phi_k) sum_l f^l_m y^l_m(theta_j).
template <class T>
S2Field<T> s2_inverse(const S2Spectrum& spec, bool weighted) {
  const int L = spec.L.value();
  const int n = 2 * L;
  const auto plan = detail::s2_plan(L);
  const DftPlans& dft = dft_plans(n);
  S2Field<T> out(spec.L, spec.channels);

  for (int c = 0; c < spec.channels; ++c) {
    const Complex* src = spec.channel(c);
#pragma omp parallel
    {
      std::vector<Complex> x(n), y(n);
#pragma omp for schedule(static)
      for (int j = 0; j < n; ++j) {
        const std::vector<double>& yl = plan->legendre[j];
        std::fill(x.begin(), x.end(), Complex{});
        for (int m = -(L - 1); m <= L - 1; ++m) {
          Complex acc = 0.0;
          for (int l = std::abs(m); l < L; ++l) acc += src[s2_index(l, m)] * yl[s2_index(l, m)];
          x[wrap(m, n)] = acc;
        }
        fftw_execute_dft(dft.bwd1, as_fftw(x.data()), as_fftw(y.data()));
        const double w = weighted ? plan->ring_weights[j] : 1.0;
        for (int k = 0; k < n; ++k) {
          if constexpr (std::is_same_v<T, double>) {
            out.at(c, j, k) = w * y[k].real();
          } else {
            out.at(c, j, k) = w * y[k];
          }
        }
      }
    }
  }
  return out;
}

// -------------------------------------------------------------- SO(3) kernels

double degree_factor(int l) { return (2.0 * l + 1.0) / kSo3Volume; }

// out^l_{mn} = s_l sum_j w_j d^l_{mn}(beta_j) sum_{a,g} f(a, j, g) exp(i m alpha_a) exp(i n gamma_g)
// with s_l = (2l+1)/(8 pi^2) for analysis, 1 for the synthesis transpose.
template <class T>
So3Spectrum so3_forward(const So3Field<T>& sig, bool analysis) {
  const int L = sig.L.value();
  const int n = 2 * L;
  const int M = 2 * L - 1;
  const auto plan = detail::so3_plan(L);
  const DftPlans& dft = dft_plans(n);
  So3Spectrum out(sig.L, sig.channels);
  const std::size_t slab = static_cast<std::size_t>(M) * M;
  const std::size_t nn2 = static_cast<std::size_t>(n) * n;
  std::vector<Complex> F(static_cast<std::size_t>(n) * slab);

  for (int c = 0; c < sig.channels; ++c) {
#pragma omp parallel
    {
      std::vector<Complex> x(nn2), y(nn2);
#pragma omp for schedule(static)
      for (int j = 0; j < n; ++j) {
        // Each beta slice is a contiguous (alpha, gamma) plane.
        const T* slice = &sig.at(c, 0, j, 0);
        for (std::size_t i = 0; i < nn2; ++i) x[i] = slice[i];
        fftw_execute_dft(dft.bwd2, as_fftw(x.data()), as_fftw(y.data()));
        const double w = analysis ? plan->beta_weights[j] : 1.0;
        Complex* Fj = F.data() + static_cast<std::size_t>(j) * slab;
        for (int m = -(L - 1); m <= L - 1; ++m) {
          const Complex* yr = y.data() + static_cast<std::size_t>(wrap(m, n)) * n;
          Complex* row = Fj + static_cast<std::size_t>(m + L - 1) * M;
          for (int q = -(L - 1); q <= L - 1; ++q) row[q + L - 1] = yr[wrap(q, n)] * w;
        }
      }
    }

    Complex* dst = out.coeffs.data() + c * out.per_channel();
#pragma omp parallel for schedule(dynamic)
    for (int m = -(L - 1); m <= L - 1; ++m) {
      for (int nn = -(L - 1); nn <= L - 1; ++nn) {
        const std::size_t col = static_cast<std::size_t>(m + L - 1) * M + (nn + L - 1);
        for (int l = std::max(std::abs(m), std::abs(nn)); l < L; ++l) {
          const std::size_t idx = so3_index(l, m, nn);
          Complex acc = 0.0;
          for (int j = 0; j < n; ++j) acc += plan->wigner_d[j][idx] * F[static_cast<std::size_t>(j) * slab + col];
          dst[idx] = analysis ? acc * degree_factor(l) : acc;
        }
      }
    }
  }
  return out;
}

// f(a, j, g) = w_j sum_{m,n} exp(-i m alpha_a) exp(-i n gamma_g) sum_l s_l f^l_{mn} d^l_{mn}(beta_j)
// with (w, s) = (1, 1) for synthesis and (quadrature, (2l+1)/(8 pi^2)) for the
// analysis transpose.
template <class T>
So3Field<T> so3_inverse(const So3Spectrum& spec, bool analysis_adjoint) {
  const int L = spec.L.value();
  const int n = 2 * L;
  const auto plan = detail::so3_plan(L);
  const DftPlans& dft = dft_plans(n);
  So3Field<T> out(spec.L, spec.channels);
  const std::size_t nn2 = static_cast<std::size_t>(n) * n;

  for (int c = 0; c < spec.channels; ++c) {
    const Complex* src = spec.coeffs.data() + c * spec.per_channel();
#pragma omp parallel
    {
      std::vector<Complex> x(nn2), y(nn2);
#pragma omp for schedule(static)
      for (int j = 0; j < n; ++j) {
        const std::vector<double>& d = plan->wigner_d[j];
        std::fill(x.begin(), x.end(), Complex{});
        for (int m = -(L - 1); m <= L - 1; ++m) {
          Complex* xr = x.data() + static_cast<std::size_t>(wrap(m, n)) * n;
          for (int nn = -(L - 1); nn <= L - 1; ++nn) {
            Complex acc = 0.0;
            for (int l = std::max(std::abs(m), std::abs(nn)); l < L; ++l) {
              const std::size_t idx = so3_index(l, m, nn);
              acc += analysis_adjoint ? src[idx] * (d[idx] * degree_factor(l)) : src[idx] * d[idx];
            }
            xr[wrap(nn, n)] = acc;
          }
        }
        fftw_execute_dft(dft.fwd2, as_fftw(x.data()), as_fftw(y.data()));
        const double w = analysis_adjoint ? plan->beta_weights[j] : 1.0;
        T* slice = &out.at(c, 0, j, 0);
        for (std::size_t i = 0; i < nn2; ++i) {
          if constexpr (std::is_same_v<T, double>) {
            slice[i] = w * y[i].real();
          } else {
            slice[i] = w * y[i];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

S2Spectrum s2_analyze(const SphericalSignal& sig) { return s2_forward(sig, true); }
S2Spectrum s2_analyze(const ComplexSphericalSignal& sig) { return s2_forward(sig, true); }
ComplexSphericalSignal s2_synthesize(const S2Spectrum& spec) { return s2_inverse<Complex>(spec, false); }
SphericalSignal s2_synthesize_real(const S2Spectrum& spec) { return s2_inverse<double>(spec, false); }
S2Spectrum s2_synthesize_real_adjoint(const SphericalSignal& grad) { return s2_forward(grad, false); }
SphericalSignal s2_analyze_adjoint(const S2Spectrum& grad) { return s2_inverse<double>(grad, true); }

So3Spectrum so3_analyze(const So3Signal& sig) { return so3_forward(sig, true); }
So3Spectrum so3_analyze(const ComplexSo3Signal& sig) { return so3_forward(sig, true); }
ComplexSo3Signal so3_synthesize(const So3Spectrum& spec) { return so3_inverse<Complex>(spec, false); }
So3Signal so3_synthesize_real(const So3Spectrum& spec) { return so3_inverse<double>(spec, false); }
So3Spectrum so3_synthesize_real_adjoint(const So3Signal& grad) { return so3_forward(grad, false); }
So3Signal so3_analyze_adjoint(const So3Spectrum& grad) { return so3_inverse<double>(grad, true); }

S2Spectrum resample_bandlimit_s2(const S2Spectrum& spec, Bandlimit L_new) {
  S2Spectrum out(L_new, spec.channels);
  const std::size_t keep = s2_coeff_count(std::min(spec.L.value(), L_new.value()));
  for (int c = 0; c < spec.channels; ++c) std::copy_n(spec.channel(c), keep, out.channel(c));
  return out;
}

So3Spectrum resample_bandlimit_so3(const So3Spectrum& spec, Bandlimit L_new) {
  So3Spectrum out(L_new, spec.channels);
  const std::size_t keep = so3_coeff_count(std::min(spec.L.value(), L_new.value()));
  for (int c = 0; c < spec.channels; ++c) std::copy_n(spec.block(c, 0), keep, out.block(c, 0));
  return out;
}

}  // namespace sphseg
