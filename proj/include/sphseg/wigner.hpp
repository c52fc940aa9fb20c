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
// Basis functions on S^2 and SO(3).
//
// Conventions used throughout the library:
//   * Rotations are parameterised by ZYZ Euler angles,
//     R(alpha, beta, gamma) = Rz(alpha) Ry(beta) Rz(gamma).
//   * D^l_{mn}(alpha, beta, gamma) = exp(-i m alpha) d^l_{mn}(beta) exp(-i n gamma),
//     a unitary representation: D(g1 g2) = D(g1) D(g2).
//   * Y^l_m carries the Condon-Shortley phase and is orthonormal on S^2.
//     Y^l_m(R^-1 x) = sum_n Y^l_n(x) D^l_{nm}(R).
#ifndef SPHSEG_WIGNER_HPP_
#define SPHSEG_WIGNER_HPP_

#include <vector>

#include "sphseg/common.hpp"

namespace sphseg {

struct EulerAngles {
  double alpha = 0.0;  // [0, 2pi)
  double beta = 0.0;   // [0, pi]
  double gamma = 0.0;  // [0, 2pi)
};

/// Real (2l+1)x(2l+1) matrix d^l(beta); rows m = -l..l, columns n = -l..l.
struct WignerSmallD {
  int ell = 0;
  std::vector<double> entries;

  int dim() const { return 2 * ell + 1; }
  double operator()(int m, int n) const { return entries[(m + ell) * dim() + (n + ell)]; }
};

/// Complex (2l+1)x(2l+1) matrix D^l(g), same index layout as WignerSmallD.
struct WignerBlock {
  int ell = 0;
  std::vector<Complex> entries;

  int dim() const { return 2 * ell + 1; }
  Complex operator()(int m, int n) const { return entries[(m + ell) * dim() + (n + ell)]; }
  Complex& at(int m, int n) { return entries[(m + ell) * dim() + (n + ell)]; }
};

/// Y^l_m(theta, phi). Throws DomainError when |m| > l or l < 0.
Complex spherical_harmonic(int ell, int m, double theta, double phi);

/// d^l(beta) via the three-term recurrence in l at fixed (m, n).
WignerSmallD wigner_d_small(int ell, double beta);

/// D^l(g) = exp(-i m alpha) d^l(beta) exp(-i n gamma).
WignerBlock wigner_D(int ell, const EulerAngles& g);

/// All blocks d^l(beta), l < L, concatenated in the SO(3) coefficient layout
/// (see so3_index). One recurrence per (m, n) column, O(L^3).
std::vector<double> wigner_d_table(int L, double beta);

/// Theta part of the spherical harmonics: Y^l_m(theta, phi) = y[l, m] exp(i m phi)
/// for all l < L, stored in the S^2 coefficient layout (see s2_index).
std::vector<double> legendre_table(int L, double theta);

}  // namespace sphseg

#endif  // SPHSEG_WIGNER_HPP_
