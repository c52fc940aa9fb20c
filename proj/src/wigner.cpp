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
#include "sphseg/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sphseg {
namespace {

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

// Seed of the recurrence, d^{l0}_{mn}(beta) with l0 = max(|m|, |n|), returned
// as (sign, log|value|). At l0 Wigner's sum collapses to a single term.
struct LogValue {
  double sign = 0.0;  // 0 encodes an exact zero
  double log_abs = 0.0;
};

LogValue seed_log(int m, int n, double beta) {
  const int j = std::max(std::abs(m), std::abs(n));
  const int s = std::max(0, n - m);
  const double c = std::cos(0.5 * beta);
  const double sn = std::sin(0.5 * beta);
  const int pow_c = 2 * j + n - m - 2 * s;
  const int pow_s = m - n + 2 * s;

  double log_abs = 0.5 * (log_factorial(j + m) + log_factorial(j - m) + log_factorial(j + n) +
                          log_factorial(j - n)) -
                   log_factorial(j + n - s) - log_factorial(s) - log_factorial(m - n + s) -
                   log_factorial(j - m - s);
  double sign = parity_sign(m - n + s);
  if (pow_c > 0) {
    if (c == 0.0) return {};
    if (c < 0.0 && (pow_c & 1)) sign = -sign;
    log_abs += pow_c * std::log(std::abs(c));
  }
  if (pow_s > 0) {
    if (sn == 0.0) return {};
    if (sn < 0.0 && (pow_s & 1)) sign = -sign;
    log_abs += pow_s * std::log(std::abs(sn));
  }
  return {sign, log_abs};
}

// Runs the l-recurrence for a single (m, n) pair from l0 up to l_max and hands
// each value to `emit(l, value)`. Values are carried with an exponent offset so
// that seeds below the double range do not flush the whole column to zero.
template <class Emit>
void recurse_column(int m, int n, int l_max, double beta, Emit&& emit) {
  const int l0 = std::max(std::abs(m), std::abs(n));
  if (l0 > l_max) return;

  const LogValue seed = seed_log(m, n, beta);
  if (seed.sign == 0.0) {
    for (int l = l0; l <= l_max; ++l) emit(l, 0.0);
    return;
  }
  constexpr double kFloor = -600.0;
  double shift = seed.log_abs < kFloor ? kFloor - seed.log_abs : 0.0;
  double prev = 0.0;
  double cur = seed.sign * std::exp(seed.log_abs + shift);
  emit(l0, shift > 0.0 ? cur * std::exp(-shift) : cur);

  const double cb = std::cos(beta);
  const double mm = static_cast<double>(m) * m;
  const double nn = static_cast<double>(n) * n;
  const double mn = static_cast<double>(m) * n;
  for (int l = l0; l < l_max; ++l) {
    const double lp = l + 1.0;
    const double norm = std::sqrt((lp * lp - mm) * (lp * lp - nn));
    const double bend = l > 0 ? mn / (l * lp) : 0.0;
    double next = lp * (2.0 * l + 1.0) / norm * (cb - bend) * cur;
    if (l > l0) {
      const double lo = std::sqrt((static_cast<double>(l) * l - mm) * (static_cast<double>(l) * l - nn));
      next -= lp * lo / (l * norm) * prev;
    }
    prev = cur;
    cur = next;
    if (shift > 0.0 && std::abs(cur) > 1e200) {
      const double k = std::min(shift, 400.0);
      const double f = std::exp(-k);
      cur *= f;
      prev *= f;
      shift -= k;
    }
    emit(l + 1, shift > 0.0 ? cur * std::exp(-shift) : cur);
  }
}

}  // namespace

Complex spherical_harmonic(int ell, int m, double theta, double phi) {
  if (ell < 0 || std::abs(m) > ell) {
    throw DomainError("spherical_harmonic: need |m| <= l, got l=" + std::to_string(ell) +
                      " m=" + std::to_string(m));
  }
  const int am = std::abs(m);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  // Normalised sectoral value, then upward in l at fixed |m|.
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int k = 1; k <= am; ++k) pmm *= -std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  double p = pmm;
  if (ell > am) {
    double p_prev = pmm;
    p = std::sqrt(2.0 * am + 3.0) * x * pmm;
    for (int l = am + 2; l <= ell; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - am * am));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - am * am) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      const double next = a * (x * p - b * p_prev);
      p_prev = p;
      p = next;
    }
  }
  if (m < 0) p *= parity_sign(am);
  return p * std::polar(1.0, m * phi);
}

WignerSmallD wigner_d_small(int ell, double beta) {
  if (ell < 0) throw DomainError("wigner_d_small: negative degree");
  WignerSmallD d;
  d.ell = ell;
  d.entries.assign(static_cast<std::size_t>(d.dim()) * d.dim(), 0.0);
  for (int m = -ell; m <= ell; ++m) {
    for (int n = -ell; n <= ell; ++n) {
      recurse_column(m, n, ell, beta, [&](int l, double v) {
        if (l == ell) d.entries[(m + ell) * d.dim() + (n + ell)] = v;
      });
    }
  }
  return d;
}

WignerBlock wigner_D(int ell, const EulerAngles& g) {
  const WignerSmallD d = wigner_d_small(ell, g.beta);
  WignerBlock D;
  D.ell = ell;
  D.entries.resize(d.entries.size());
  for (int m = -ell; m <= ell; ++m) {
    for (int n = -ell; n <= ell; ++n) {
      D.at(m, n) = std::polar(d(m, n), -(m * g.alpha + n * g.gamma));
    }
  }
  return D;
}

std::vector<double> wigner_d_table(int L, double beta) {
  std::vector<double> table(so3_coeff_count(L), 0.0);
  for (int m = -(L - 1); m <= L - 1; ++m) {
    for (int n = -(L - 1); n <= L - 1; ++n) {
      recurse_column(m, n, L - 1, beta,
                     [&](int l, double v) { table[so3_index(l, m, n)] = v; });
    }
  }
  return table;
}

std::vector<double> legendre_table(int L, double theta) {
  std::vector<double> table(s2_coeff_count(L), 0.0);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m < L; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    double p_prev = 0.0;
    double p = pmm;
    for (int l = m; l < L; ++l) {
      if (l == m + 1) {
        p_prev = p;
        p = std::sqrt(2.0 * m + 3.0) * x * pmm;
      } else if (l > m + 1) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        const double next = a * (x * p - b * p_prev);
        p_prev = p;
        p = next;
      }
      table[s2_index(l, m)] = p;
      if (m > 0) table[s2_index(l, -m)] = parity_sign(m) * p;
    }
  }
  return table;
}

}  // namespace sphseg
