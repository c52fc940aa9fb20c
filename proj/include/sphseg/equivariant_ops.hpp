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
// Spectral layer algebra on S^2 and SO(3).
//
// With left translation (L_R f)(x) = f(R^-1 x):
//   S^2 spectra rotate as  f^l   -> D^l(R) f^l
//   SO(3) spectra rotate as f^l  -> conj(D^l(R)) f^l   (acting on the row index m)
//
// Convolutions follow from the orthogonality relations:
//   (kappa * f)(R) = int_{S^2} kappa(R^-1 x) f(x) dx
//       => out^l_{mn} = (-1)^m f^l_{-m} kappa^l_n
//   (kappa * f)(R) = int_{SO(3)} kappa(S^-1 R) f(S) dS
//       => out^l = 8 pi^2 / (2l+1) f^l kappa^l           (matrix product)
// Output channel o sums over input channels i of kernel channel o * in + i.
#ifndef SPHSEG_EQUIVARIANT_OPS_HPP_
#define SPHSEG_EQUIVARIANT_OPS_HPP_

#include <vector>

#include "sphseg/grid.hpp"
#include "sphseg/signal.hpp"

namespace sphseg {

So3Spectrum conv_s2_to_so3(const KernelSpectrumS2& kappa, const S2Spectrum& f);
So3Spectrum conv_so3(const KernelSpectrumSo3& kappa, const So3Spectrum& f);

/// Reverse-mode adjoints. Gradients of complex values are d/dRe + i d/dIm.
/// Either output pointer may be null.
void conv_s2_to_so3_backward(const KernelSpectrumS2& kappa, const S2Spectrum& f, const So3Spectrum& grad_out,
                             KernelSpectrumS2* grad_kappa, S2Spectrum* grad_f);
void conv_so3_backward(const KernelSpectrumSo3& kappa, const So3Spectrum& f, const So3Spectrum& grad_out,
                       KernelSpectrumSo3* grad_kappa, So3Spectrum* grad_f);

/// SO(3) -> S^2 final layer in the spectral domain:
///   f_final(x) = sum_{l,m,n} (-1)^n cf^l_{mn} conj(Y^l_m(x)),
/// i.e. g^l_m = (-1)^m sum_n (-1)^n cf^l_{-m,n}. This is the projection
///   f_final(x) = sum_{l,n} (2l+1)/(8 pi^2) int_{SO(3)} f(S) Y^l_n(S^-1 x) dS
/// of the signal f with spectrum cf, which makes the layer equivariant.
S2Spectrum so3_to_s2_final_spectrum(const So3Spectrum& cf);
So3Spectrum so3_to_s2_final_spectrum_adjoint(const S2Spectrum& grad);
/// Samples of the above on the S^2 grid of the same bandlimit (real part).
SphericalSignal so3_to_s2_final(const So3Spectrum& cf);

/// int_{SO(3)} f dg = 8 pi^2 f^0_{00}, one value per channel (real part).
std::vector<double> invariant_readout(const So3Spectrum& f);

/// Orbit integral over the stabiliser of the north pole,
///   f_H(x) = int_0^{2pi} f(g_x Rz(t)) dt,  g_x = R(phi, theta, 0),
/// i.e. g^l_m = 2 pi sqrt(4 pi / (2l+1)) (-1)^m f^l_{-m,0}.
S2Spectrum h_orbit_projection_spectrum(const So3Spectrum& f);
SphericalSignal h_orbit_projection(const So3Spectrum& f);

/// Spectrum of L_R f.
S2Spectrum rotate_s2_spectrum(const S2Spectrum& f, const Rotation& R);
So3Spectrum rotate_so3_spectrum(const So3Spectrum& f, const Rotation& R);

}  // namespace sphseg

#endif  // SPHSEG_EQUIVARIANT_OPS_HPP_
