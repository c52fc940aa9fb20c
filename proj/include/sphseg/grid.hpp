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
// Driscoll-Healy grids on S^2 and SO(3), kernel support grids near the
// identity, and rotation utilities.
#ifndef SPHSEG_GRID_HPP_
#define SPHSEG_GRID_HPP_

#include <array>
#include <vector>

#include "sphseg/common.hpp"
#include "sphseg/rng.hpp"
#include "sphseg/wigner.hpp"

namespace sphseg {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major

class Rotation {
 public:
  /// Identity.
  Rotation();

  /// Validates orthogonality (R^T R = I within 1e-9) and det = +1.
  static Rotation from_matrix(const Mat3& m);
  static Rotation from_euler(const EulerAngles& e);

  const Mat3& matrix() const { return m_; }
  const EulerAngles& euler() const { return euler_; }
  double operator()(int r, int c) const { return m_[3 * r + c]; }

  Rotation inverse() const;
  Rotation operator*(const Rotation& rhs) const;
  Vec3 apply(const Vec3& v) const;

 private:
  Rotation(const Mat3& m, const EulerAngles& e) : m_(m), euler_(e) {}
  Mat3 m_;
  EulerAngles euler_;
};

Rotation rotation_from_euler(const EulerAngles& e);
/// Gimbal lock (beta in {0, pi}) is resolved by gamma := 0.
EulerAngles rotation_to_euler(const Rotation& r);
/// Validating overload: throws DomainError for non-orthogonal input.
EulerAngles rotation_to_euler(const Mat3& m);

/// Haar-uniform rotation: alpha, gamma ~ U[0, 2pi), cos(beta) ~ U[-1, 1].
Rotation random_rotation(Rng& rng);

/// Unit vector for spherical coordinates (theta from +z, phi from +x).
Vec3 sphere_point(double theta, double phi);
/// Inverse of sphere_point; phi in [0, 2pi).
std::array<double, 2> sphere_angles(const Vec3& v);

/// Quadrature nodes theta_j = pi (2j+1) / (4L), j < 2L, and Driscoll-Healy
/// weights q_j with sum_j q_j f(theta_j) = int_0^pi f sin(theta) dtheta for
/// polynomials in cos(theta) of degree < 2L.
std::vector<double> dh_thetas(int L);
std::vector<double> dh_weights(int L);

struct S2Grid {
  Bandlimit L;
  std::vector<double> thetas;   // 2L
  std::vector<double> phis;     // 2L, pi k / L
  std::vector<double> weights;  // per ring, includes the phi spacing
};

struct So3Grid {
  Bandlimit L;
  std::vector<double> alphas;   // 2L
  std::vector<double> betas;    // 2L
  std::vector<double> gammas;   // 2L
  std::vector<double> weights;  // per beta, includes alpha and gamma spacing
};

S2Grid make_s2_grid(Bandlimit L);
So3Grid make_so3_grid(Bandlimit L);

struct SupportCounts {
  int n_alpha = 8;
  int n_beta = 3;
  int n_gamma = 8;
  friend bool operator==(const SupportCounts&, const SupportCounts&) = default;
};

/// Kernel sample points near the identity. Point p = (beta_k, alpha_a, gamma_c)
/// with beta_k = k beta_max / n_beta (k = 1..n_beta), alpha_a = 2 pi a / n_alpha
/// and gamma = 2 pi c / n_gamma - alpha_a (mod 2pi), so every point is close to
/// the identity when beta_max is small. Ordered by (beta, alpha, gamma) index.
struct KernelSupportGrid {
  Bandlimit L;
  double beta_max = 0.0;
  SupportCounts counts;
  std::vector<EulerAngles> points;
  std::vector<int> beta_index;  // per point, into 0..n_beta-1

  std::size_t size() const { return points.size(); }
};

KernelSupportGrid make_kernel_support_grid(Bandlimit L, double beta_max, SupportCounts counts);

}  // namespace sphseg

#endif  // SPHSEG_GRID_HPP_
