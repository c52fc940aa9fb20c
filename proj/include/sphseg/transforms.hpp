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
// Fourier transforms on S^2 and SO(3) over the Driscoll-Healy grids.
//
//   S^2:   f^l_m    = sum_x w(theta) f(x) conj(Y^l_m(x))
//   SO(3): f^l_{mn} = (2l+1)/(8 pi^2) sum_g w(beta) f(g) conj(D^l_{mn}(g))
//
// Synthesis uses Y and D without conjugation. The alpha/phi and gamma axes are
// length-2L DFTs; the theta/beta axis is a dense contraction against
// precomputed Legendre / Wigner-d tables. Work is split across OpenMP threads
// over grid rings and coefficient columns; every coefficient is reduced by a
// single thread in a fixed order, so results do not depend on thread count.
//
// The *_adjoint functions are the transposes of the real-linear maps used by
// reverse-mode differentiation (gradients of complex coefficients are stored
// as d/dRe + i d/dIm).
#ifndef SPHSEG_TRANSFORMS_HPP_
#define SPHSEG_TRANSFORMS_HPP_

#include "sphseg/signal.hpp"

namespace sphseg {

S2Spectrum s2_analyze(const SphericalSignal& sig);
S2Spectrum s2_analyze(const ComplexSphericalSignal& sig);
ComplexSphericalSignal s2_synthesize(const S2Spectrum& spec);
/// Real part of s2_synthesize; exact for conjugate-symmetric spectra.
SphericalSignal s2_synthesize_real(const S2Spectrum& spec);

/// Transpose of s2_synthesize_real: sum_x g(x) conj(Y^l_m(x)) (no weights).
S2Spectrum s2_synthesize_real_adjoint(const SphericalSignal& grad);
/// Transpose of s2_analyze on real signals: w(theta) Re(sum g^l_m Y^l_m(x)).
SphericalSignal s2_analyze_adjoint(const S2Spectrum& grad);

So3Spectrum so3_analyze(const So3Signal& sig);
So3Spectrum so3_analyze(const ComplexSo3Signal& sig);
ComplexSo3Signal so3_synthesize(const So3Spectrum& spec);
So3Signal so3_synthesize_real(const So3Spectrum& spec);

So3Spectrum so3_synthesize_real_adjoint(const So3Signal& grad);
So3Signal so3_analyze_adjoint(const So3Spectrum& grad);

/// Drops degrees >= L_new or appends zero blocks up to L_new.
S2Spectrum resample_bandlimit_s2(const S2Spectrum& spec, Bandlimit L_new);
So3Spectrum resample_bandlimit_so3(const So3Spectrum& spec, Bandlimit L_new);

}  // namespace sphseg

#endif  // SPHSEG_TRANSFORMS_HPP_
