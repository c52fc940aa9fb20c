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
// Serial reference implementations used as test oracles and as the baseline
// of the kernel benchmark. Nothing here is separable or parallel: transforms
// sum every grid point against every basis function, and convolutions are
// evaluated as quadratures of their defining integrals.
#ifndef SPHSEG_REFERENCE_HPP_
#define SPHSEG_REFERENCE_HPP_

#include <vector>

#include "sphseg/grid.hpp"
#include "sphseg/signal.hpp"

namespace sphseg::reference {

S2Spectrum s2_analyze_direct(const SphericalSignal& sig);
SphericalSignal s2_synthesize_real_direct(const S2Spectrum& spec);
So3Spectrum so3_analyze_direct(const So3Signal& sig);
So3Signal so3_synthesize_real_direct(const So3Spectrum& spec);

/// sum_{l,m} f^l_m Y^l_m(theta, phi) for one channel.
Complex s2_eval(const S2Spectrum& f, int channel, double theta, double phi);
/// sum_{l,m,n} f^l_{mn} D^l_{mn}(g) for one channel.
Complex so3_eval(const So3Spectrum& f, int channel, const EulerAngles& g);

/// int_{S^2} kappa(R^-1 x) f(x) dx by Driscoll-Healy quadrature, one value per
/// output channel.
std::vector<Complex> conv_s2_to_so3_quadrature(const KernelSpectrumS2& kappa, const S2Spectrum& f, const Rotation& R);

/// int_{SO(3)} kappa(S^-1 R) f(S) dS by quadrature over the SO(3) grid.
std::vector<Complex> conv_so3_quadrature(const KernelSpectrumSo3& kappa, const So3Spectrum& f, const Rotation& R);

/// Position-space form of the SO(3) -> S^2 projection at x:
///   int_{S^2} K(y) int_0^{2pi} f(g_x Rz(t) g_y^-1) dt dy,
///   K(y) = sum_{l,n} (2l+1)/(8 pi^2) Y^l_n(y),
/// with both integrals evaluated by quadrature on grids of the spectrum's
/// bandlimit (exact for bandlimited f).
Complex final_projection_quadrature(const So3Spectrum& f, int channel, double theta, double phi);

/// int_0^{2pi} f(R(phi, theta, t)) dt by the trapezoidal rule with `steps` nodes.
Complex h_orbit_quadrature(const So3Spectrum& f, int channel, double theta, double phi, int steps);

}  // namespace sphseg::reference

#endif  // SPHSEG_REFERENCE_HPP_
