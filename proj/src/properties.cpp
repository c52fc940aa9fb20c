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
// Measured-error probes behind the verification suites.
#include <omp.h>

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "sphseg/datagen.hpp"
#include "sphseg/equivariant_ops.hpp"
#include "sphseg/reference.hpp"
#include "sphseg/training.hpp"
#include "sphseg/transforms.hpp"
#include "sphseg/verify.hpp"

namespace sphseg::verify {
namespace {

Complex normal_complex(Rng& rng) { return {rng.normal(), rng.normal()}; }

S2Spectrum random_real_s2(int L, int channels, Rng& rng, int band = -1) {
  if (band < 0) band = L;
  S2Spectrum s(Bandlimit(L), channels);
  for (int c = 0; c < channels; ++c)
    for (int l = 0; l < band; ++l) {
      s.at(c, l, 0) = rng.normal();
      for (int m = 1; m <= l; ++m) {
        s.at(c, l, m) = normal_complex(rng);
        s.at(c, l, -m) = parity_sign(m) * std::conj(s.at(c, l, m));
      }
    }
  return s;
}

So3Spectrum random_real_so3(int L, int channels, Rng& rng) {
  So3Spectrum s(Bandlimit(L), channels);
  for (int c = 0; c < channels; ++c)
    for (int l = 0; l < L; ++l)
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n) {
          if (m > 0 || (m == 0 && n > 0)) {
            s.at(c, l, m, n) = normal_complex(rng);
            s.at(c, l, -m, -n) = parity_sign(m + n) * std::conj(s.at(c, l, m, n));
          } else if (m == 0 && n == 0) {
            s.at(c, l, 0, 0) = rng.normal();
          }
        }
  return s;
}

template <class A, class B>
double relative_l2(const std::vector<A>& a, const std::vector<B>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

template <class A>
double max_abs(const std::vector<A>& a) {
  double e = 0.0;
  for (const auto& v : a) e = std::max(e, std::abs(v));
  return e;
}

template <class A>
double max_abs_diff(const std::vector<A>& a, const std::vector<A>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ThreadCount {
 public:
  explicit ThreadCount(int n) : saved_(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved_); }
  ThreadCount(const ThreadCount&) = delete;
  ThreadCount& operator=(const ThreadCount&) = delete;

 private:
  int saved_;
};

}  // namespace

// ------------------------------------------------------------- transforms

double s2_round_trip_error(int L, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const S2Spectrum f = random_real_s2(L, 2, rng);
    worst = std::max(worst, relative_l2(s2_analyze(s2_synthesize_real(f)).coeffs, f.coeffs));
    const SphericalSignal x = s2_synthesize_real(random_real_s2(L, 2, rng));
    worst = std::max(worst, relative_l2(s2_synthesize_real(s2_analyze(x)).values, x.values));
  }
  return worst;
}

double so3_round_trip_error(int L, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const So3Spectrum f = random_real_so3(L, 2, rng);
    worst = std::max(worst, relative_l2(so3_analyze(so3_synthesize_real(f)).coeffs, f.coeffs));
    const So3Signal x = so3_synthesize_real(random_real_so3(L, 2, rng));
    worst = std::max(worst, relative_l2(so3_synthesize_real(so3_analyze(x)).values, x.values));
  }
  return worst;
}

double so3_parseval_error(int L, std::uint64_t seed) {
  Rng rng(seed);
  const So3Spectrum f = random_real_so3(L, 1, rng);
  const So3Signal x = so3_synthesize_real(f);
  const So3Grid g = make_so3_grid(Bandlimit(L));
  double quad = 0.0;
  for (int a = 0; a < 2 * L; ++a)
    for (int b = 0; b < 2 * L; ++b)
      for (int c = 0; c < 2 * L; ++c) quad += g.weights[b] * x.at(0, a, b, c) * x.at(0, a, b, c);
  double spectral = 0.0;
  for (int l = 0; l < L; ++l) {
    double fro = 0.0;
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) fro += std::norm(f.at(0, l, m, n));
    spectral += kSo3Volume / (2 * l + 1) * fro;
  }
  return std::abs(spectral - quad) / quad;
}

double transform_linearity_error(int L, std::uint64_t seed) {
  Rng rng(seed);
  const double a = rng.normal(), b = rng.normal();
  const SphericalSignal f = s2_synthesize_real(random_real_s2(L, 1, rng));
  const SphericalSignal g = s2_synthesize_real(random_real_s2(L, 1, rng));
  SphericalSignal fg = f;
  for (std::size_t i = 0; i < fg.values.size(); ++i) fg.values[i] = a * f.values[i] + b * g.values[i];
  S2Spectrum want = s2_analyze(f);
  const S2Spectrum sg = s2_analyze(g);
  for (std::size_t i = 0; i < want.coeffs.size(); ++i) want.coeffs[i] = a * want.coeffs[i] + b * sg.coeffs[i];
  double err = max_abs_diff(s2_analyze(fg).coeffs, want.coeffs) / max_abs(want.coeffs);

  const So3Signal p = so3_synthesize_real(random_real_so3(L, 1, rng));
  const So3Signal q = so3_synthesize_real(random_real_so3(L, 1, rng));
  So3Signal pq = p;
  for (std::size_t i = 0; i < pq.values.size(); ++i) pq.values[i] = a * p.values[i] + b * q.values[i];
  So3Spectrum want3 = so3_analyze(p);
  const So3Spectrum sq = so3_analyze(q);
  for (std::size_t i = 0; i < want3.coeffs.size(); ++i) want3.coeffs[i] = a * want3.coeffs[i] + b * sq.coeffs[i];
  return std::max(err, max_abs_diff(so3_analyze(pq).coeffs, want3.coeffs) / max_abs(want3.coeffs));
}

DeterminismCheck transform_determinism(int L, int threads, std::uint64_t seed) {
  Rng rng(seed);
  const SphericalSignal x = s2_synthesize_real(random_real_s2(L, 3, rng));
  const So3Signal y = so3_synthesize_real(random_real_so3(L, 3, rng));
  S2Spectrum s1, s2, sn;
  So3Spectrum t1, t2, tn;
  {
    ThreadCount one(1);
    s1 = s2_analyze(x);
    t1 = so3_analyze(y);
  }
  {
    ThreadCount many(threads);
    s2 = s2_analyze(x);
    sn = s2_analyze(x);
    t2 = so3_analyze(y);
    tn = so3_analyze(y);
  }
  DeterminismCheck r;
  r.bitwise_repeatable = s2.coeffs == sn.coeffs && t2.coeffs == tn.coeffs;
  r.cross_thread_error = std::max(max_abs_diff(s1.coeffs, s2.coeffs), max_abs_diff(t1.coeffs, t2.coeffs));
  return r;
}

// ------------------------------------------------------- basis and grids

double s2_orthonormality_error(int L) {
  const S2Grid g = make_s2_grid(Bandlimit(L));
  const std::size_t nc = s2_coeff_count(L), np = g.thetas.size() * g.phis.size();
  // Weighted samples sqrt(w) Y, [coeff][point].
  std::vector<Complex> Y(nc * np);
  for (std::size_t j = 0; j < g.thetas.size(); ++j)
    for (std::size_t k = 0; k < g.phis.size(); ++k) {
      const std::size_t p = j * g.phis.size() + k;
      for (int l = 0; l < L; ++l)
        for (int m = -l; m <= l; ++m)
          Y[s2_index(l, m) * np + p] = std::sqrt(g.weights[j]) * spherical_harmonic(l, m, g.thetas[j], g.phis[k]);
    }
  double err = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : err)
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = a; b < nc; ++b) {
      Complex s = 0.0;
      for (std::size_t p = 0; p < np; ++p) s += std::conj(Y[a * np + p]) * Y[b * np + p];
      err = std::max(err, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  return err;
}

double so3_orthogonality_error(int lmax) {
  // Products of degree <= 2 lmax are integrated exactly by the grid at lmax + 1.
  const int L = lmax + 1;
  const So3Grid g = make_so3_grid(Bandlimit(L));
  const std::size_t nc = so3_coeff_count(L);
  const std::size_t np = g.alphas.size() * g.betas.size() * g.gammas.size();
  std::vector<Complex> D(nc * np);
  std::size_t p = 0;
  for (std::size_t b = 0; b < g.betas.size(); ++b) {
    const std::vector<double> d = wigner_d_table(L, g.betas[b]);
    for (double alpha : g.alphas)
      for (double gamma : g.gammas) {
        for (int l = 0; l < L; ++l)
          for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n) {
              const std::size_t i = so3_index(l, m, n);
              D[i * np + p] = std::sqrt(g.weights[b]) * std::polar(d[i], -m * alpha - n * gamma);
            }
        ++p;
      }
  }
  std::vector<int> degree(nc);
  for (int l = 0; l < L; ++l)
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) degree[so3_index(l, m, n)] = l;
  double err = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : err)
  for (std::size_t a = 0; a < nc; ++a)
    for (std::size_t b = a; b < nc; ++b) {
      Complex s = 0.0;
      for (std::size_t q = 0; q < np; ++q) s += std::conj(D[a * np + q]) * D[b * np + q];
      const double want = a == b ? kSo3Volume / (2 * degree[a] + 1) : 0.0;
      err = std::max(err, std::abs(s - want));
    }
  return err;
}

double wigner_unitarity_error(int lmax, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double err = 0.0;
  for (int t = 0; t < trials; ++t) {
    const EulerAngles e = random_rotation(rng).euler();
    for (int l = 0; l <= lmax; ++l) {
      const WignerBlock D = wigner_D(l, e);
      for (int i = -l; i <= l; ++i)
        for (int j = -l; j <= l; ++j) {
          Complex s = 0.0;
          for (int k = -l; k <= l; ++k) s += D(i, k) * std::conj(D(j, k));
          err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    }
  }
  return err;
}

double wigner_inverse_law_error(int lmax, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double err = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Rotation g = random_rotation(rng);
    for (int l = 0; l <= lmax; ++l) {
      const WignerBlock D = wigner_D(l, g.euler());
      const WignerBlock Dinv = wigner_D(l, g.inverse().euler());
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n) err = std::max(err, std::abs(Dinv(m, n) - std::conj(D(n, m))));
    }
  }
  return err;
}

double wigner_pole_stability_error(int ell) {
  double err = 0.0;
  for (double beta : {0.0, 1e-9, 1e-4, 0.01, kPi - 0.01, kPi - 1e-4, kPi - 1e-9, kPi}) {
    const WignerSmallD d = wigner_d_small(ell, beta);
    const int n = d.dim();
    for (double v : d.entries)
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += d.entries[k * n + i] * d.entries[k * n + j];
        err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
  }
  return err;
}

double support_scaling_error() {
  double err = 0.0;
  const std::pair<int, int> pairs[] = {{42, 21}, {50, 10}, {16, 8}, {12, 3}};
  for (auto [La, Lb] : pairs) {
    const double beta_a = 0.1 * kPi;
    const double beta_b = beta_a * La / Lb;
    const KernelSupportGrid a = make_kernel_support_grid(Bandlimit(La), beta_a, {});
    const KernelSupportGrid b = make_kernel_support_grid(Bandlimit(Lb), beta_b, {});
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) {
      err = std::max(err, std::abs(a.points[i].beta * La - b.points[i].beta * Lb));
      if (a.points[i].alpha != b.points[i].alpha || a.points[i].gamma != b.points[i].gamma)
        return std::numeric_limits<double>::infinity();
    }
  }
  return err;
}

double haar_uniformity_p_value(int samples, std::uint64_t seed) {
  // 8 z-bands x 8 longitude sectors; equal areas because dA = dz dphi.
  const int bands = 8, sectors = 8;
  Rng rng(seed);
  std::vector<int> counts(bands * sectors, 0);
  const Vec3 v = {0.3, -0.5, std::sqrt(1 - 0.34)};
  for (int i = 0; i < samples; ++i) {
    const Vec3 x = random_rotation(rng).apply(v);
    const int b = std::min(bands - 1, static_cast<int>((x[2] + 1) / 2 * bands));
    double phi = std::atan2(x[1], x[0]);
    if (phi < 0) phi += kTwoPi;
    const int s = std::min(sectors - 1, static_cast<int>(phi / kTwoPi * sectors));
    ++counts[b * sectors + s];
  }
  const double expected = static_cast<double>(samples) / counts.size();
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, chi2));
}

// ------------------------------------------------------ equivariant ops

double conv_s2_oracle_error(int L, int probes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> fourier, quad;
  for (int t = 0; t < probes; ++t) {
    const KernelSpectrumS2 k{2, 1, random_real_s2(L, 2, rng)};
    const S2Spectrum f = random_real_s2(L, 1, rng);
    const Rotation R = random_rotation(rng);
    const So3Spectrum out = conv_s2_to_so3(k, f);
    const std::vector<Complex> q = reference::conv_s2_to_so3_quadrature(k, f, R);
    for (int o = 0; o < 2; ++o) {
      fourier.push_back(reference::so3_eval(out, o, R.euler()));
      quad.push_back(q[o]);
    }
  }
  return relative_l2(fourier, quad);
}

double conv_so3_oracle_error(int L, int probes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Complex> fourier, quad;
  for (int t = 0; t < probes; ++t) {
    const KernelSpectrumSo3 k{2, 1, random_real_so3(L, 2, rng)};
    const So3Spectrum f = random_real_so3(L, 1, rng);
    const Rotation R = random_rotation(rng);
    const So3Spectrum out = conv_so3(k, f);
    const std::vector<Complex> q = reference::conv_so3_quadrature(k, f, R);
    for (int o = 0; o < 2; ++o) {
      fourier.push_back(reference::so3_eval(out, o, R.euler()));
      quad.push_back(q[o]);
    }
  }
  return relative_l2(fourier, quad);
}

double final_projection_error(int L, int points, std::uint64_t seed) {
  Rng rng(seed);
  const So3Spectrum cf = random_real_so3(L, 1, rng);
  const S2Spectrum spec = so3_to_s2_final_spectrum(cf);
  std::vector<Complex> fourier, quad;
  for (int t = 0; t < points; ++t) {
    const double theta = std::acos(rng.uniform(-1.0, 1.0)), phi = rng.uniform(0.0, kTwoPi);
    fourier.push_back(reference::s2_eval(spec, 0, theta, phi));
    quad.push_back(reference::final_projection_quadrature(cf, 0, theta, phi));
  }
  return relative_l2(fourier, quad);
}

double conv_equivariance_error(int L, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Rotation R = random_rotation(rng);
    const KernelSpectrumS2 ks{2, 1, random_real_s2(L, 2, rng)};
    const S2Spectrum f = random_real_s2(L, 1, rng);
    worst = std::max(worst, relative_l2(conv_s2_to_so3(ks, rotate_s2_spectrum(f, R)).coeffs,
                                        rotate_so3_spectrum(conv_s2_to_so3(ks, f), R).coeffs));
    const KernelSpectrumSo3 kg{1, 2, random_real_so3(L, 2, rng)};
    const So3Spectrum h = random_real_so3(L, 2, rng);
    worst = std::max(worst, relative_l2(conv_so3(kg, rotate_so3_spectrum(h, R)).coeffs,
                                        rotate_so3_spectrum(conv_so3(kg, h), R).coeffs));
  }
  return worst;
}

double final_layer_equivariance_error(int L, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Rotation R = random_rotation(rng);
    const So3Spectrum cf = random_real_so3(L, 2, rng);
    worst = std::max(worst, relative_l2(so3_to_s2_final_spectrum(rotate_so3_spectrum(cf, R)).coeffs,
                                        rotate_s2_spectrum(so3_to_s2_final_spectrum(cf), R).coeffs));
  }
  return worst;
}

double op_linearity_error(int L, std::uint64_t seed) {
  Rng rng(seed);
  const double a = rng.normal(), b = rng.normal();
  auto combine = [&](const auto& x, const auto& y) {
    auto z = x;
    for (std::size_t i = 0; i < z.coeffs.size(); ++i) z.coeffs[i] = a * x.coeffs[i] + b * y.coeffs[i];
    return z;
  };
  auto rel = [](const auto& x, const auto& y) { return max_abs_diff(x.coeffs, y.coeffs) / max_abs(y.coeffs); };
  const S2Spectrum f = random_real_s2(L, 1, rng), g = random_real_s2(L, 1, rng);
  const KernelSpectrumS2 k1{2, 1, random_real_s2(L, 2, rng)}, k2{2, 1, random_real_s2(L, 2, rng)};
  const KernelSpectrumS2 k12{2, 1, combine(k1.spectrum, k2.spectrum)};
  double err = rel(conv_s2_to_so3(k1, combine(f, g)), combine(conv_s2_to_so3(k1, f), conv_s2_to_so3(k1, g)));
  err = std::max(err, rel(conv_s2_to_so3(k12, f), combine(conv_s2_to_so3(k1, f), conv_s2_to_so3(k2, f))));

  const So3Spectrum p = random_real_so3(L, 2, rng), q = random_real_so3(L, 2, rng);
  const KernelSpectrumSo3 j1{1, 2, random_real_so3(L, 2, rng)}, j2{1, 2, random_real_so3(L, 2, rng)};
  const KernelSpectrumSo3 j12{1, 2, combine(j1.spectrum, j2.spectrum)};
  err = std::max(err, rel(conv_so3(j1, combine(p, q)), combine(conv_so3(j1, p), conv_so3(j1, q))));
  err = std::max(err, rel(conv_so3(j12, p), combine(conv_so3(j1, p), conv_so3(j2, p))));
  err = std::max(err, rel(so3_to_s2_final_spectrum(combine(p, q)),
                          combine(so3_to_s2_final_spectrum(p), so3_to_s2_final_spectrum(q))));
  return err;
}

// ---------------------------------------------------------------- network

ModelSpec equivariance_probe_spec(int L, bool relu) {
  auto layer = [L](LayerKind kind, int in, int out) {
    LayerSpec l;
    l.kind = kind;
    l.in_channels = in;
    l.out_channels = out;
    l.in_bandlimit = L;
    l.out_bandlimit = L;
    l.beta_hat = 0.125 * kPi;
    l.support = {4, 2, 4};
    return l;
  };
  ModelSpec spec;
  spec.relu = relu;
  spec.layers = {layer(LayerKind::kS2So3, 1, 4), layer(LayerKind::kSo3So3, 4, 4), layer(LayerKind::kSo3S2, 4, 3)};
  return spec;
}

double network_equivariance_error(int L, bool relu, int rotations, std::uint64_t seed, bool use_median) {
  const Network net(equivariance_probe_spec(L, relu));
  Rng rng(seed);
  const std::vector<double> params = net.init_parameters(rng);
  const auto kernels = net.make_kernels(params);
  const S2Spectrum x = random_real_s2(L, 1, rng, std::min(L, 6));
  const S2Spectrum y = s2_analyze(net.forward(params, kernels, s2_synthesize_real(x)).logits);
  std::vector<double> errors;
  for (int t = 0; t < rotations; ++t) {
    const Rotation R = random_rotation(rng);
    const SphericalSignal got = net.forward(params, kernels, s2_synthesize_real(rotate_s2_spectrum(x, R))).logits;
    const SphericalSignal want = s2_synthesize_real(rotate_s2_spectrum(y, R));
    errors.push_back(relative_l2(got.values, want.values));
  }
  return use_median ? median(errors) : *std::max_element(errors.begin(), errors.end());
}

double readout_invariance_error(int L, int rotations, std::uint64_t seed) {
  ModelSpec spec;
  spec.relu = false;
  spec.head = Head::kClassification;
  spec.num_classes = 3;
  LayerSpec a;
  a.kind = LayerKind::kS2So3;
  a.in_channels = 1;
  a.out_channels = 3;
  a.in_bandlimit = L;
  a.out_bandlimit = L;
  a.beta_hat = 0.2 * kPi;
  a.support = {4, 2, 4};
  LayerSpec b = a;
  b.kind = LayerKind::kSo3So3;
  b.in_channels = 3;
  b.out_channels = 4;
  b.out_bandlimit = std::max(2, L - 2);
  spec.layers = {a, b};
  const Network net(spec);
  Rng rng(seed);
  const std::vector<double> params = net.init_parameters(rng);
  const S2Spectrum x = random_real_s2(L, 1, rng);
  Tape base;
  net.forward(params, s2_synthesize_real(x), &base);
  const double scale = max_abs(base.features);
  double worst = 0.0;
  for (int t = 0; t < rotations; ++t) {
    Tape tape;
    net.forward(params, s2_synthesize_real(rotate_s2_spectrum(x, random_rotation(rng))), &tape);
    worst = std::max(worst, max_abs_diff(tape.features, base.features) / scale);
  }
  return worst;
}

SamplerCheck sampler_check(const SamplerConfig& cfg, int models, std::uint64_t seed) {
  SamplerCheck r;
  for (int i = 0; i < models; ++i) {
    Rng rng(derive_seed(seed, i));
    const ModelSpec s = sample_equivariant_architecture(cfg, rng);
    ++r.sampled;
    try {
      validate_model_spec(s);
      ++r.chain_valid;
    } catch (const ShapeError&) {
    }
    const std::size_t n = count_parameters(s);
    if (n >= cfg.param_lo && n <= cfg.param_hi) ++r.in_range;
    const double product = s.layers[0].beta_hat * s.layers[0].in_bandlimit;
    for (const LayerSpec& l : s.layers)
      r.max_beta_l_spread = std::max(r.max_beta_l_spread, std::abs(l.beta_hat * l.in_bandlimit - product) / product);
  }
  return r;
}

// ---------------------------------------------------------------- datagen

double datagen_rotation_error(int L, int trials, std::uint64_t seed) {
  Canvas c;
  for (int r = 0; r < kCanvasSize; ++r)
    for (int k = 0; k < kCanvasSize; ++k) {
      const double d2 = (r + 0.5 - 22.0) * (r + 0.5 - 22.0) + (k + 0.5 - 35.0) * (k + 0.5 - 35.0);
      c.at(r, k) = std::exp(-d2 / 72.0);
    }
  Rng rng(seed);
  const S2Spectrum spec = s2_analyze(project_canvas_to_sphere(c, Bandlimit(L), ProjectionPoint::kPole, Rotation{}).signal);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Rotation R = random_rotation(rng);
    const ProjectedSample rot = project_canvas_to_sphere(c, Bandlimit(L), ProjectionPoint::kPole, R);
    const SphericalSignal want = s2_synthesize_real(rotate_s2_spectrum(spec, R.inverse()));
    worst = std::max(worst, relative_l2(rot.signal.values, want.values));
  }
  return worst;
}

int datagen_mask_violations(int L, int records, std::uint64_t seed) {
  DataGenConfig cfg;
  cfg.L = L;
  cfg.seed = seed;
  cfg.rotated = true;
  cfg.items_per_sphere = 2;
  const std::vector<SourceImage> sources = synthetic_glyphs(100, seed);
  const Dataset d = generate_dataset(cfg, sources, records);
  int bad = 0;
  for (const DatasetRecord& r : d.records) {
    std::size_t background = 0;
    bool ok = true;
    for (std::uint8_t m : r.mask) {
      ok = ok && m < cfg.num_classes;
      background += m == 0;
    }
    ok = ok && background > 0 && background < r.mask.size();
    bad += !ok;
  }
  return bad;
}

// --------------------------------------------------------- reproducibility

ReproducibilityCheck pipeline_reproducibility(const std::string& dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  ThreadCount one(1);
  auto run = [&](int k) {
    const std::string data_path = (fs::path(dir) / ("repro_data_" + std::to_string(k) + ".sphd")).string();
    const std::string model_path = (fs::path(dir) / ("repro_model_" + std::to_string(k) + ".sphm")).string();
    DataGenConfig cfg;
    cfg.L = 8;
    cfg.seed = seed;
    cfg.rotated = true;
    const std::vector<SourceImage> sources = synthetic_glyphs(40, seed);
    write_dataset(data_path, generate_dataset(cfg, sources, 12));
    const Dataset data = read_dataset(data_path);

    ModelSpec spec;
    LayerSpec a;
    a.kind = LayerKind::kS2So3;
    a.in_bandlimit = 8;
    a.out_bandlimit = 6;
    a.out_channels = 3;
    a.beta_hat = 0.2 * kPi;
    a.support = {4, 2, 4};
    LayerSpec b = a;
    b.kind = LayerKind::kSo3S2;
    b.in_channels = 3;
    b.in_bandlimit = 6;
    b.out_bandlimit = 8;
    b.out_channels = cfg.num_classes;
    b.beta_hat = a.beta_hat * 8 / 6;
    spec.layers = {a, b};
    const Network net(spec);
    Rng rng(seed);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 4;
    tc.seed = seed;
    const TrainResult r = train(net, net.init_parameters(rng), data, nullptr, tc);
    save_model(model_path, {spec, r.params, r.optimizer});
    return std::pair{file_bytes(data_path), file_bytes(model_path)};
  };
  const auto first = run(0);
  const auto second = run(1);
  return {first.first == second.first && !first.first.empty(), first.second == second.second && !first.second.empty()};
}

}  // namespace sphseg::verify
