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
#include "sphseg/equivariant_ops.hpp"

#include <cmath>
#include <string>

#include "sphseg/transforms.hpp"
#include "sphseg/wigner.hpp"

namespace sphseg {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void check_kernel(int out_channels, int in_channels, int kernel_channels, Bandlimit kL, Bandlimit fL, int f_channels,
                  const char* op) {
  require(kL == fL, std::string(op) + ": kernel bandlimit " + std::to_string(kL.value()) +
                        " does not match signal bandlimit " + std::to_string(fL.value()));
  require(kernel_channels == out_channels * in_channels, std::string(op) + ": kernel channel count mismatch");
  require(f_channels == in_channels, std::string(op) + ": signal has " + std::to_string(f_channels) +
                                         " channels, kernel expects " + std::to_string(in_channels));
}

double conv_scale(int l) { return kSo3Volume / (2.0 * l + 1.0); }

}  // namespace

So3Spectrum conv_s2_to_so3(const KernelSpectrumS2& kappa, const S2Spectrum& f) {
  check_kernel(kappa.out_channels, kappa.in_channels, kappa.spectrum.channels, kappa.spectrum.L, f.L, f.channels,
               "conv_s2_to_so3");
  const int L = f.L.value();
  const int O = kappa.out_channels, I = kappa.in_channels;
  So3Spectrum out(f.L, O);
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int o = 0; o < O; ++o) {
    for (int l = 0; l < L; ++l) {
      const int d = 2 * l + 1;
      Complex* blk = out.block(o, l);
      for (int i = 0; i < I; ++i) {
        const Complex* fi = f.channel(i);
        const Complex* k = kappa.spectrum.channel(o * I + i);
        for (int m = -l; m <= l; ++m) {
          const Complex a = parity_sign(m) * fi[s2_index(l, -m)];
          for (int n = -l; n <= l; ++n) blk[(m + l) * d + (n + l)] += a * k[s2_index(l, n)];
        }
      }
    }
  }
  return out;
}

void conv_s2_to_so3_backward(const KernelSpectrumS2& kappa, const S2Spectrum& f, const So3Spectrum& grad_out,
                             KernelSpectrumS2* grad_kappa, S2Spectrum* grad_f) {
  const int L = f.L.value();
  const int O = kappa.out_channels, I = kappa.in_channels;
  require(grad_out.L == f.L && grad_out.channels == O, "conv_s2_to_so3_backward: gradient shape mismatch");
  if (grad_kappa != nullptr) {
    *grad_kappa = KernelSpectrumS2{O, I, S2Spectrum(f.L, O * I)};
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int o = 0; o < O; ++o) {
      for (int i = 0; i < I; ++i) {
        const Complex* fi = f.channel(i);
        Complex* gk = grad_kappa->spectrum.channel(o * I + i);
        for (int l = 0; l < L; ++l) {
          const int d = 2 * l + 1;
          const Complex* g = grad_out.block(o, l);
          for (int m = -l; m <= l; ++m) {
            const Complex a = parity_sign(m) * std::conj(fi[s2_index(l, -m)]);
            for (int n = -l; n <= l; ++n) gk[s2_index(l, n)] += a * g[(m + l) * d + (n + l)];
          }
        }
      }
    }
  }
  if (grad_f != nullptr) {
    *grad_f = S2Spectrum(f.L, I);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < I; ++i) {
      Complex* gf = grad_f->channel(i);
      for (int o = 0; o < O; ++o) {
        const Complex* k = kappa.spectrum.channel(o * I + i);
        for (int l = 0; l < L; ++l) {
          const int d = 2 * l + 1;
          const Complex* g = grad_out.block(o, l);
          for (int m = -l; m <= l; ++m) {
            Complex acc = 0.0;
            for (int n = -l; n <= l; ++n) acc += std::conj(k[s2_index(l, n)]) * g[(m + l) * d + (n + l)];
            gf[s2_index(l, -m)] += parity_sign(m) * acc;
          }
        }
      }
    }
  }
}

So3Spectrum conv_so3(const KernelSpectrumSo3& kappa, const So3Spectrum& f) {
  check_kernel(kappa.out_channels, kappa.in_channels, kappa.spectrum.channels, kappa.spectrum.L, f.L, f.channels,
               "conv_so3");
  const int L = f.L.value();
  const int O = kappa.out_channels, I = kappa.in_channels;
  So3Spectrum out(f.L, O);
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (int o = 0; o < O; ++o) {
    for (int l = 0; l < L; ++l) {
      const int d = 2 * l + 1;
      const double s = conv_scale(l);
      Complex* blk = out.block(o, l);
      for (int i = 0; i < I; ++i) {
        const Complex* F = f.block(i, l);
        const Complex* K = kappa.spectrum.block(o * I + i, l);
        for (int m = 0; m < d; ++m)
          for (int p = 0; p < d; ++p) {
            const Complex a = s * F[m * d + p];
            const Complex* Kp = K + p * d;
            Complex* row = blk + m * d;
            for (int n = 0; n < d; ++n) row[n] += a * Kp[n];
          }
      }
    }
  }
  return out;
}

void conv_so3_backward(const KernelSpectrumSo3& kappa, const So3Spectrum& f, const So3Spectrum& grad_out,
                       KernelSpectrumSo3* grad_kappa, So3Spectrum* grad_f) {
  const int L = f.L.value();
  const int O = kappa.out_channels, I = kappa.in_channels;
  require(grad_out.L == f.L && grad_out.channels == O, "conv_so3_backward: gradient shape mismatch");
  if (grad_kappa != nullptr) {
    // dK = s F^H dOut
    *grad_kappa = KernelSpectrumSo3{O, I, So3Spectrum(f.L, O * I)};
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int o = 0; o < O; ++o) {
      for (int i = 0; i < I; ++i) {
        for (int l = 0; l < L; ++l) {
          const int d = 2 * l + 1;
          const double s = conv_scale(l);
          const Complex* F = f.block(i, l);
          const Complex* G = grad_out.block(o, l);
          Complex* gk = grad_kappa->spectrum.block(o * I + i, l);
          for (int m = 0; m < d; ++m)
            for (int p = 0; p < d; ++p) {
              const Complex a = s * std::conj(F[m * d + p]);
              for (int n = 0; n < d; ++n) gk[p * d + n] += a * G[m * d + n];
            }
        }
      }
    }
  }
  if (grad_f != nullptr) {
    // dF = s dOut K^H
    *grad_f = So3Spectrum(f.L, I);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int i = 0; i < I; ++i) {
      for (int l = 0; l < L; ++l) {
        const int d = 2 * l + 1;
        const double s = conv_scale(l);
        Complex* gf = grad_f->block(i, l);
        for (int o = 0; o < O; ++o) {
          const Complex* K = kappa.spectrum.block(o * I + i, l);
          const Complex* G = grad_out.block(o, l);
          for (int m = 0; m < d; ++m)
            for (int p = 0; p < d; ++p) {
              Complex acc = 0.0;
              for (int n = 0; n < d; ++n) acc += G[m * d + n] * std::conj(K[p * d + n]);
              gf[m * d + p] += s * acc;
            }
        }
      }
    }
  }
}

S2Spectrum so3_to_s2_final_spectrum(const So3Spectrum& cf) {
  const int L = cf.L.value();
  S2Spectrum out(cf.L, cf.channels);
  for (int c = 0; c < cf.channels; ++c)
    for (int l = 0; l < L; ++l)
      for (int m = -l; m <= l; ++m) {
        Complex acc = 0.0;
        for (int n = -l; n <= l; ++n) acc += parity_sign(n) * cf.at(c, l, -m, n);
        out.at(c, l, m) = parity_sign(m) * acc;
      }
  return out;
}

So3Spectrum so3_to_s2_final_spectrum_adjoint(const S2Spectrum& grad) {
  const int L = grad.L.value();
  So3Spectrum out(grad.L, grad.channels);
  for (int c = 0; c < grad.channels; ++c)
    for (int l = 0; l < L; ++l)
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n) out.at(c, l, -m, n) = parity_sign(m + n) * grad.at(c, l, m);
  return out;
}

SphericalSignal so3_to_s2_final(const So3Spectrum& cf) { return s2_synthesize_real(so3_to_s2_final_spectrum(cf)); }

std::vector<double> invariant_readout(const So3Spectrum& f) {
  std::vector<double> out(f.channels);
  for (int c = 0; c < f.channels; ++c) out[c] = kSo3Volume * f.at(c, 0, 0, 0).real();
  return out;
}

S2Spectrum h_orbit_projection_spectrum(const So3Spectrum& f) {
  const int L = f.L.value();
  S2Spectrum out(f.L, f.channels);
  for (int c = 0; c < f.channels; ++c)
    for (int l = 0; l < L; ++l) {
      const double s = kTwoPi * std::sqrt(4.0 * kPi / (2.0 * l + 1.0));
      for (int m = -l; m <= l; ++m) out.at(c, l, m) = s * parity_sign(m) * f.at(c, l, -m, 0);
    }
  return out;
}

SphericalSignal h_orbit_projection(const So3Spectrum& f) { return s2_synthesize_real(h_orbit_projection_spectrum(f)); }

S2Spectrum rotate_s2_spectrum(const S2Spectrum& f, const Rotation& R) {
  const int L = f.L.value();
  S2Spectrum out(f.L, f.channels);
  for (int l = 0; l < L; ++l) {
    const WignerBlock D = wigner_D(l, R.euler());
    for (int c = 0; c < f.channels; ++c)
      for (int m = -l; m <= l; ++m) {
        Complex acc = 0.0;
        for (int k = -l; k <= l; ++k) acc += D(m, k) * f.at(c, l, k);
        out.at(c, l, m) = acc;
      }
  }
  return out;
}

So3Spectrum rotate_so3_spectrum(const So3Spectrum& f, const Rotation& R) {
  const int L = f.L.value();
  So3Spectrum out(f.L, f.channels);
  for (int l = 0; l < L; ++l) {
    const WignerBlock D = wigner_D(l, R.euler());
    const int d = 2 * l + 1;
    for (int c = 0; c < f.channels; ++c) {
      const Complex* F = f.block(c, l);
      Complex* G = out.block(c, l);
      for (int p = 0; p < d; ++p)
        for (int m = 0; m < d; ++m) {
          const Complex a = std::conj(D.entries[p * d + m]);
          for (int n = 0; n < d; ++n) G[p * d + n] += a * F[m * d + n];
        }
    }
  }
  return out;
}

}  // namespace sphseg
