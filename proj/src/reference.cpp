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
#include "sphseg/reference.hpp"

#include <cmath>

#include "sphseg/wigner.hpp"

namespace sphseg::reference {
namespace {

// Y^l_m on every grid point, [point][s2_index].
std::vector<std::vector<Complex>> harmonics_on_grid(const S2Grid& g) {
  const int L = g.L.value();
  std::vector<std::vector<Complex>> Y;
  for (double theta : g.thetas)
    for (double phi : g.phis) {
      std::vector<Complex> row(s2_coeff_count(L));
      for (int l = 0; l < L; ++l)
        for (int m = -l; m <= l; ++m) row[s2_index(l, m)] = spherical_harmonic(l, m, theta, phi);
      Y.push_back(std::move(row));
    }
  return Y;
}

// D^l_{mn}(g) for all l < L in the SO(3) coefficient layout.
std::vector<Complex> wigner_D_all(int L, const EulerAngles& g) {
  const std::vector<double> d = wigner_d_table(L, g.beta);
  std::vector<Complex> D(d.size());
  for (int l = 0; l < L; ++l)
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        const std::size_t i = so3_index(l, m, n);
        D[i] = std::polar(d[i], -m * g.alpha - n * g.gamma);
      }
  return D;
}

}  // namespace

S2Spectrum s2_analyze_direct(const SphericalSignal& sig) {
  const S2Grid g = make_s2_grid(sig.L);
  const auto Y = harmonics_on_grid(g);
  const int n = sig.L.samples();
  S2Spectrum out(sig.L, sig.channels);
  for (int c = 0; c < sig.channels; ++c)
    for (std::size_t i = 0; i < out.per_channel(); ++i) {
      Complex acc = 0.0;
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) acc += g.weights[j] * sig.at(c, j, k) * std::conj(Y[j * n + k][i]);
      out.channel(c)[i] = acc;
    }
  return out;
}

SphericalSignal s2_synthesize_real_direct(const S2Spectrum& spec) {
  const S2Grid g = make_s2_grid(spec.L);
  const auto Y = harmonics_on_grid(g);
  const int n = spec.L.samples();
  SphericalSignal out(spec.L, spec.channels);
  for (int c = 0; c < spec.channels; ++c)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (std::size_t i = 0; i < spec.per_channel(); ++i) acc += spec.channel(c)[i] * Y[j * n + k][i];
        out.at(c, j, k) = acc.real();
      }
  return out;
}

So3Spectrum so3_analyze_direct(const So3Signal& sig) {
  const So3Grid g = make_so3_grid(sig.L);
  const int L = sig.L.value(), n = sig.L.samples();
  So3Spectrum out(sig.L, sig.channels);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      for (int q = 0; q < n; ++q) {
        const std::vector<Complex> D = wigner_D_all(L, {g.alphas[a], g.betas[b], g.gammas[q]});
        for (int c = 0; c < sig.channels; ++c) {
          const double v = g.weights[b] * sig.at(c, a, b, q);
          Complex* dst = out.block(c, 0);
          for (std::size_t i = 0; i < D.size(); ++i) dst[i] += v * std::conj(D[i]);
        }
      }
  for (int c = 0; c < sig.channels; ++c)
    for (int l = 0; l < L; ++l) {
      Complex* blk = out.block(c, l);
      for (int i = 0; i < (2 * l + 1) * (2 * l + 1); ++i) blk[i] *= (2.0 * l + 1.0) / kSo3Volume;
    }
  return out;
}

So3Signal so3_synthesize_real_direct(const So3Spectrum& spec) {
  const So3Grid g = make_so3_grid(spec.L);
  const int L = spec.L.value(), n = spec.L.samples();
  So3Signal out(spec.L, spec.channels);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      for (int q = 0; q < n; ++q) {
        const std::vector<Complex> D = wigner_D_all(L, {g.alphas[a], g.betas[b], g.gammas[q]});
        for (int c = 0; c < spec.channels; ++c) {
          const Complex* src = spec.block(c, 0);
          Complex acc = 0.0;
          for (std::size_t i = 0; i < D.size(); ++i) acc += src[i] * D[i];
          out.at(c, a, b, q) = acc.real();
        }
      }
  return out;
}

Complex s2_eval(const S2Spectrum& f, int channel, double theta, double phi) {
  Complex acc = 0.0;
  for (int l = 0; l < f.L.value(); ++l)
    for (int m = -l; m <= l; ++m) acc += f.at(channel, l, m) * spherical_harmonic(l, m, theta, phi);
  return acc;
}

Complex so3_eval(const So3Spectrum& f, int channel, const EulerAngles& g) {
  const std::vector<Complex> D = wigner_D_all(f.L.value(), g);
  const Complex* src = f.block(channel, 0);
  Complex acc = 0.0;
  for (std::size_t i = 0; i < D.size(); ++i) acc += src[i] * D[i];
  return acc;
}

std::vector<Complex> conv_s2_to_so3_quadrature(const KernelSpectrumS2& kappa, const S2Spectrum& f, const Rotation& R) {
  const S2Grid g = make_s2_grid(f.L);
  const Rotation Rinv = R.inverse();
  const int O = kappa.out_channels, I = kappa.in_channels;
  std::vector<Complex> out(O, 0.0);
  for (std::size_t j = 0; j < g.thetas.size(); ++j)
    for (double phi : g.phis) {
      const auto [t, p] = sphere_angles(Rinv.apply(sphere_point(g.thetas[j], phi)));
      for (int i = 0; i < I; ++i) {
        const Complex fx = s2_eval(f, i, g.thetas[j], phi);
        for (int o = 0; o < O; ++o) out[o] += g.weights[j] * s2_eval(kappa.spectrum, o * I + i, t, p) * fx;
      }
    }
  return out;
}

std::vector<Complex> conv_so3_quadrature(const KernelSpectrumSo3& kappa, const So3Spectrum& f, const Rotation& R) {
  const So3Grid g = make_so3_grid(f.L);
  const int O = kappa.out_channels, I = kappa.in_channels;
  std::vector<Complex> out(O, 0.0);
  for (std::size_t b = 0; b < g.betas.size(); ++b)
    for (double a : g.alphas)
      for (double c : g.gammas) {
        const Rotation S = rotation_from_euler({a, g.betas[b], c});
        const EulerAngles rel = (S.inverse() * R).euler();
        for (int i = 0; i < I; ++i) {
          const Complex fs = so3_eval(f, i, {a, g.betas[b], c});
          for (int o = 0; o < O; ++o) out[o] += g.weights[b] * so3_eval(kappa.spectrum, o * I + i, rel) * fs;
        }
      }
  return out;
}

Complex final_projection_quadrature(const So3Spectrum& f, int channel, double theta, double phi) {
  const int L = f.L.value();
  const S2Grid g = make_s2_grid(f.L);
  const int steps = 2 * L;
  const Rotation gx = rotation_from_euler({phi, theta, 0.0});
  Complex acc = 0.0;
  for (std::size_t j = 0; j < g.thetas.size(); ++j)
    for (double p : g.phis) {
      Complex K = 0.0;
      for (int l = 0; l < L; ++l)
        for (int n = -l; n <= l; ++n) K += (2.0 * l + 1.0) / kSo3Volume * spherical_harmonic(l, n, g.thetas[j], p);
      const Rotation gy_inv = rotation_from_euler({p, g.thetas[j], 0.0}).inverse();
      Complex fiber = 0.0;
      for (int s = 0; s < steps; ++s) {
        const Rotation S = gx * rotation_from_euler({kTwoPi * s / steps, 0.0, 0.0}) * gy_inv;
        fiber += so3_eval(f, channel, S.euler());
      }
      acc += g.weights[j] * K * fiber * (kTwoPi / steps);
    }
  return acc;
}

Complex h_orbit_quadrature(const So3Spectrum& f, int channel, double theta, double phi, int steps) {
  Complex acc = 0.0;
  for (int s = 0; s < steps; ++s) acc += so3_eval(f, channel, {phi, theta, kTwoPi * s / steps});
  return acc * (kTwoPi / steps);
}

}  // namespace sphseg::reference
