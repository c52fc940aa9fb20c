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
#ifndef SPHSEG_COMMON_HPP_
#define SPHSEG_COMMON_HPP_

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sphseg {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Haar measure of SO(3) in ZYZ Euler coordinates.
inline constexpr double kSo3Volume = 8.0 * std::numbers::pi * std::numbers::pi;

/// Raised for arguments outside a function's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when array shapes, bandlimits or channel counts disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed files (bad magic, version, truncated payload).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Harmonic bandlimit: degrees 0..L-1 are retained, grids have 2L samples per
/// angle.
class Bandlimit {
 public:
  constexpr Bandlimit() = default;
  explicit Bandlimit(int L) : value_(L) {
    if (L < 1) throw DomainError("bandlimit must be >= 1, got " + std::to_string(L));
  }
  constexpr int value() const { return value_; }
  constexpr int samples() const { return 2 * value_; }
  friend constexpr bool operator==(Bandlimit a, Bandlimit b) = default;

 private:
  int value_ = 1;
};

// Number of S^2 coefficients with degree < L.
constexpr std::size_t s2_coeff_count(int L) { return static_cast<std::size_t>(L) * L; }

// Index of (ell, m) inside a per-channel S^2 coefficient vector.
constexpr std::size_t s2_index(int ell, int m) {
  return static_cast<std::size_t>(ell * ell + ell + m);
}

// Number of SO(3) coefficients with degree < L: sum (2l+1)^2 = L(2L-1)(2L+1)/3.
constexpr std::size_t so3_coeff_count(int L) {
  return static_cast<std::size_t>(L) * (2 * L - 1) * (2 * L + 1) / 3;
}

// Offset of the degree-ell block inside a per-channel SO(3) coefficient vector.
constexpr std::size_t so3_block_offset(int ell) { return so3_coeff_count(ell); }

constexpr std::size_t so3_index(int ell, int m, int n) {
  return so3_block_offset(ell) + static_cast<std::size_t>((m + ell) * (2 * ell + 1) + (n + ell));
}

constexpr double parity_sign(int k) { return (k & 1) ? -1.0 : 1.0; }

}  // namespace sphseg

#endif  // SPHSEG_COMMON_HPP_
