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

#include "sphseg/reference.hpp"

#include <gtest/gtest.h>
#include "sphseg/transforms.hpp"
#include "test_util.hpp"

namespace sphseg {
namespace {

TEST(ReferenceTransformTest, AgreesWithSeparableS2) {
  Rng rng(1);
  const int L = 8;
  const S2Spectrum s = testing::random_real_s2_spectrum(L, 2, rng);
  const SphericalSignal direct = reference::s2_synthesize_real_direct(s);
  EXPECT_LT(testing::relative_l2(direct.values, s2_synthesize_real(s).values), 1e-12);
  EXPECT_LT(testing::relative_l2(reference::s2_analyze_direct(direct).coeffs, s2_analyze(direct).coeffs), 1e-12);
  EXPECT_LT(testing::relative_l2(reference::s2_analyze_direct(direct).coeffs, s.coeffs), 1e-11);
}

TEST(ReferenceTransformTest, AgreesWithSeparableSo3) {
  Rng rng(2);
  const int L = 5;
  const So3Spectrum s = testing::random_real_so3_spectrum(L, 2, rng);
  const So3Signal direct = reference::so3_synthesize_real_direct(s);
  EXPECT_LT(testing::relative_l2(direct.values, so3_synthesize_real(s).values), 1e-12);
  EXPECT_LT(testing::relative_l2(reference::so3_analyze_direct(direct).coeffs, so3_analyze(direct).coeffs), 1e-12);
  EXPECT_LT(testing::relative_l2(reference::so3_analyze_direct(direct).coeffs, s.coeffs), 1e-11);
}

}  // namespace
}  // namespace sphseg
