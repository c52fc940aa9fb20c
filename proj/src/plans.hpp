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
// Precomputed tables shared by the transform kernels. Built once per
// bandlimit under a mutex and immutable afterwards.
#ifndef SPHSEG_SRC_PLANS_HPP_
#define SPHSEG_SRC_PLANS_HPP_

#include <memory>
#include <vector>

#include "sphseg/common.hpp"

namespace sphseg::detail {

struct S2Plan {
  int L = 0;
  std::vector<double> thetas;
  std::vector<double> ring_weights;          // includes phi spacing
  std::vector<std::vector<double>> legendre;  // [ring][s2_index(l, m)]
};

struct So3Plan {
  int L = 0;
  std::vector<double> betas;
  std::vector<double> beta_weights;           // includes alpha and gamma spacing
  std::vector<std::vector<double>> wigner_d;  // [beta][so3_index(l, m, n)]
};

std::shared_ptr<const S2Plan> s2_plan(int L);
std::shared_ptr<const So3Plan> so3_plan(int L);

}  // namespace sphseg::detail

#endif  // SPHSEG_SRC_PLANS_HPP_
