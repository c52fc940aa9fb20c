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
// Multichannel samples and spectra on S^2 and SO(3).
#ifndef SPHSEG_SIGNAL_HPP_
#define SPHSEG_SIGNAL_HPP_

#include <span>
#include <vector>

#include "sphseg/common.hpp"

namespace sphseg {

/// Samples on the 2L x 2L Driscoll-Healy grid, laid out (channel, theta, phi).
template <class T>
struct S2Field {
  Bandlimit L;
  int channels = 0;
  std::vector<T> values;

  S2Field() = default;
  S2Field(Bandlimit bl, int c) : L(bl), channels(c), values(static_cast<std::size_t>(c) * plane_size(), T{}) {}

  std::size_t plane_size() const { return static_cast<std::size_t>(L.samples()) * L.samples(); }
  T& at(int c, int j, int k) { return values[c * plane_size() + static_cast<std::size_t>(j) * L.samples() + k]; }
  const T& at(int c, int j, int k) const {
    return values[c * plane_size() + static_cast<std::size_t>(j) * L.samples() + k];
  }
  std::span<T> channel(int c) { return {values.data() + c * plane_size(), plane_size()}; }
  std::span<const T> channel(int c) const { return {values.data() + c * plane_size(), plane_size()}; }
};

/// Samples on the 2L x 2L x 2L Euler-angle grid. Indexed as (channel, alpha,
/// beta, gamma); stored beta-major so each beta slice is contiguous.
template <class T>
struct So3Field {
  Bandlimit L;
  int channels = 0;
  std::vector<T> values;

  So3Field() = default;
  So3Field(Bandlimit bl, int c) : L(bl), channels(c), values(static_cast<std::size_t>(c) * volume_size(), T{}) {}

  std::size_t slice_size() const { return static_cast<std::size_t>(L.samples()) * L.samples(); }
  std::size_t volume_size() const { return slice_size() * L.samples(); }
  std::size_t offset(int c, int a, int b, int g) const {
    return c * volume_size() + b * slice_size() + static_cast<std::size_t>(a) * L.samples() + g;
  }
  T& at(int c, int a, int b, int g) { return values[offset(c, a, b, g)]; }
  const T& at(int c, int a, int b, int g) const { return values[offset(c, a, b, g)]; }
  std::span<T> channel(int c) { return {values.data() + c * volume_size(), volume_size()}; }
  std::span<const T> channel(int c) const { return {values.data() + c * volume_size(), volume_size()}; }
};

using SphericalSignal = S2Field<double>;
using ComplexSphericalSignal = S2Field<Complex>;
using So3Signal = So3Field<double>;
using ComplexSo3Signal = So3Field<Complex>;

/// Coefficients f^l_m, l < L, per channel; see s2_index.
struct S2Spectrum {
  Bandlimit L;
  int channels = 0;
  std::vector<Complex> coeffs;

  S2Spectrum() = default;
  S2Spectrum(Bandlimit bl, int c) : L(bl), channels(c), coeffs(static_cast<std::size_t>(c) * per_channel(), Complex{}) {}

  std::size_t per_channel() const { return s2_coeff_count(L.value()); }
  Complex& at(int c, int l, int m) { return coeffs[c * per_channel() + s2_index(l, m)]; }
  const Complex& at(int c, int l, int m) const { return coeffs[c * per_channel() + s2_index(l, m)]; }
  Complex* channel(int c) { return coeffs.data() + c * per_channel(); }
  const Complex* channel(int c) const { return coeffs.data() + c * per_channel(); }
};

/// Coefficients f^l_{mn}, l < L, per channel; (2l+1)x(2l+1) row-major blocks.
struct So3Spectrum {
  Bandlimit L;
  int channels = 0;
  std::vector<Complex> coeffs;

  So3Spectrum() = default;
  So3Spectrum(Bandlimit bl, int c) : L(bl), channels(c), coeffs(static_cast<std::size_t>(c) * per_channel(), Complex{}) {}

  std::size_t per_channel() const { return so3_coeff_count(L.value()); }
  Complex& at(int c, int l, int m, int n) { return coeffs[c * per_channel() + so3_index(l, m, n)]; }
  const Complex& at(int c, int l, int m, int n) const { return coeffs[c * per_channel() + so3_index(l, m, n)]; }
  Complex* block(int c, int l) { return coeffs.data() + c * per_channel() + so3_block_offset(l); }
  const Complex* block(int c, int l) const { return coeffs.data() + c * per_channel() + so3_block_offset(l); }
};

/// Kernel on S^2 for the lifting convolution; channel index o * in + i.
struct KernelSpectrumS2 {
  int out_channels = 0;
  int in_channels = 0;
  S2Spectrum spectrum;
};

/// Kernel on SO(3); channel index o * in + i.
struct KernelSpectrumSo3 {
  int out_channels = 0;
  int in_channels = 0;
  So3Spectrum spectrum;
};

}  // namespace sphseg

#endif  // SPHSEG_SIGNAL_HPP_
