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
#include "sphseg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sphseg {
namespace {

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

Mat3 euler_matrix(const EulerAngles& e) {
  const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
  const double cb = std::cos(e.beta), sb = std::sin(e.beta);
  const double cg = std::cos(e.gamma), sg = std::sin(e.gamma);
  // Rz(alpha) Ry(beta) Rz(gamma)
  return {ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb,
          sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb,
          -sb * cg,               sb * sg,                 cb};
}

EulerAngles matrix_euler(const Mat3& m) {
  const double cb = std::clamp(m[8], -1.0, 1.0);
  EulerAngles e;
  e.beta = std::acos(cb);
  const double sb = std::hypot(m[2], m[5]);
  if (sb > 1e-12) {
    e.alpha = std::atan2(m[5], m[2]);
    e.gamma = std::atan2(m[7], -m[6]);
  } else if (cb > 0.0) {
    e.beta = 0.0;
    e.alpha = std::atan2(m[3], m[0]);
    e.gamma = 0.0;
  } else {
    // Rz(a) Ry(pi): first column is (-cos a, -sin a, 0).
    e.beta = kPi;
    e.alpha = std::atan2(-m[3], -m[0]);
    e.gamma = 0.0;
  }
  e.alpha = wrap_angle(e.alpha);
  e.gamma = wrap_angle(e.gamma);
  return e;
}

void check_orthogonal(const Mat3& m) {
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m[3 * k + i] * m[3 * k + j];
      err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                     m[2] * (m[3] * m[7] - m[4] * m[6]);
  if (!(err < 1e-9) || !(det > 0.0)) {
    throw DomainError("matrix is not a proper rotation (orthogonality error " +
                      std::to_string(err) + ", det " + std::to_string(det) + ")");
  }
}

}  // namespace

Rotation::Rotation() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1}, euler_{} {}

Rotation Rotation::from_matrix(const Mat3& m) {
  check_orthogonal(m);
  return Rotation(m, matrix_euler(m));
}

Rotation Rotation::from_euler(const EulerAngles& e) {
  const Mat3 m = euler_matrix(e);
  return Rotation(m, matrix_euler(m));
}

Rotation Rotation::inverse() const {
  Mat3 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[3 * i + j] = m_[3 * j + i];
  return Rotation(t, matrix_euler(t));
}

Rotation Rotation::operator*(const Rotation& rhs) const {
  Mat3 p{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += m_[3 * i + k] * rhs.m_[3 * k + j];
      p[3 * i + j] = s;
    }
  return Rotation(p, matrix_euler(p));
}

Vec3 Rotation::apply(const Vec3& v) const {
  return {m_[0] * v[0] + m_[1] * v[1] + m_[2] * v[2], m_[3] * v[0] + m_[4] * v[1] + m_[5] * v[2],
          m_[6] * v[0] + m_[7] * v[1] + m_[8] * v[2]};
}

Rotation rotation_from_euler(const EulerAngles& e) { return Rotation::from_euler(e); }

EulerAngles rotation_to_euler(const Rotation& r) { return r.euler(); }

EulerAngles rotation_to_euler(const Mat3& m) { return Rotation::from_matrix(m).euler(); }

Rotation random_rotation(Rng& rng) {
  EulerAngles e;
  e.alpha = rng.uniform(0.0, kTwoPi);
  e.beta = std::acos(std::clamp(rng.uniform(-1.0, 1.0), -1.0, 1.0));
  e.gamma = rng.uniform(0.0, kTwoPi);
  return Rotation::from_euler(e);
}

Vec3 sphere_point(double theta, double phi) {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

std::array<double, 2> sphere_angles(const Vec3& v) {
  const double theta = std::atan2(std::hypot(v[0], v[1]), v[2]);
  return {theta, wrap_angle(std::atan2(v[1], v[0]))};
}

std::vector<double> dh_thetas(int L) {
  std::vector<double> t(2 * L);
  for (int j = 0; j < 2 * L; ++j) t[j] = kPi * (2.0 * j + 1.0) / (4.0 * L);
  return t;
}

std::vector<double> dh_weights(int L) {
  std::vector<double> w(2 * L);
  for (int j = 0; j < 2 * L; ++j) {
    const double theta = kPi * (2.0 * j + 1.0) / (4.0 * L);
    double s = 0.0;
    for (int k = 0; k < L; ++k) s += std::sin((2.0 * k + 1.0) * theta) / (2.0 * k + 1.0);
    w[j] = 2.0 / L * std::sin(theta) * s;
  }
  return w;
}

S2Grid make_s2_grid(Bandlimit L) {
  const int l = L.value();
  S2Grid g;
  g.L = L;
  g.thetas = dh_thetas(l);
  g.phis.resize(2 * l);
  for (int k = 0; k < 2 * l; ++k) g.phis[k] = kPi * k / l;
  g.weights = dh_weights(l);
  for (double& w : g.weights) w *= kPi / l;
  return g;
}

So3Grid make_so3_grid(Bandlimit L) {
  const int l = L.value();
  So3Grid g;
  g.L = L;
  g.betas = dh_thetas(l);
  g.alphas.resize(2 * l);
  for (int k = 0; k < 2 * l; ++k) g.alphas[k] = kPi * k / l;
  g.gammas = g.alphas;
  g.weights = dh_weights(l);
  for (double& w : g.weights) w *= (kPi / l) * (kPi / l);
  return g;
}

KernelSupportGrid make_kernel_support_grid(Bandlimit L, double beta_max, SupportCounts counts) {
  if (!(beta_max > 0.0) || beta_max > kPi) {
    throw DomainError("kernel support beta_max must lie in (0, pi], got " + std::to_string(beta_max));
  }
  if (counts.n_alpha < 1 || counts.n_beta < 1 || counts.n_gamma < 1) {
    throw DomainError("kernel support counts must be >= 1");
  }
  KernelSupportGrid g;
  g.L = L;
  g.beta_max = beta_max;
  g.counts = counts;
  g.points.reserve(static_cast<std::size_t>(counts.n_alpha) * counts.n_beta * counts.n_gamma);
  for (int b = 0; b < counts.n_beta; ++b) {
    const double beta = (b + 1) * beta_max / counts.n_beta;
    for (int a = 0; a < counts.n_alpha; ++a) {
      const double alpha = kTwoPi * a / counts.n_alpha;
      for (int c = 0; c < counts.n_gamma; ++c) {
        const double gamma = wrap_angle(kTwoPi * c / counts.n_gamma - alpha);
        g.points.push_back({alpha, beta, gamma});
        g.beta_index.push_back(b);
      }
    }
  }
  return g;
}

}  // namespace sphseg
