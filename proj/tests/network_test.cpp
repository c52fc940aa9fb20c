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
#include "sphseg/network.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "sphseg/binary_io.hpp"
#include "sphseg/equivariant_ops.hpp"
#include "sphseg/transforms.hpp"
#include "sphseg/verify.hpp"
#include "sphseg/wigner.hpp"
#include "test_util.hpp"

namespace sphseg {
namespace {

using testing::max_abs;
using testing::max_abs_diff;
using testing::random_real_s2_spectrum;
using testing::relative_l2;

LayerSpec make_layer(LayerKind kind, int ni, int no, int bi, int bo, double beta, SupportCounts s = {3, 2, 3}) {
  LayerSpec l;
  l.kind = kind;
  l.in_channels = ni;
  l.out_channels = no;
  l.in_bandlimit = bi;
  l.out_bandlimit = bo;
  l.beta_hat = beta;
  l.support = s;
  return l;
}

ModelSpec tiny_segmentation(bool relu) {
  ModelSpec s;
  s.relu = relu;
  s.layers = {make_layer(LayerKind::kS2So3, 1, 2, 6, 4, 0.4), make_layer(LayerKind::kSo3So3, 2, 3, 4, 3, 0.5),
              make_layer(LayerKind::kSo3S2, 3, 2, 3, 6, 0.6)};
  return s;
}

SphericalSignal random_input(int L, int channels, Rng& rng) {
  return s2_synthesize_real(random_real_s2_spectrum(L, channels, rng));
}

std::vector<std::uint8_t> random_mask(std::size_t n, int classes, Rng& rng) {
  std::vector<std::uint8_t> m(n);
  for (auto& v : m) v = static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
  return m;
}

std::vector<double> random_params(const Network& net, Rng& rng) {
  std::vector<double> p(net.num_parameters());
  for (auto& v : p) v = 0.5 * rng.normal();
  return p;
}

// -------------------------------------------------------------- kernels

TEST(KernelBasis, ZeroWeightsGiveZeroSpectrum) {
  const LayerSpec l = make_layer(LayerKind::kSo3So3, 2, 3, 5, 5, 0.3);
  const KernelBasis basis(l);
  const std::vector<double> w(basis.weight_count(), 0.0);
  EXPECT_EQ(max_abs(basis.to_so3_spectrum(w).spectrum.coeffs), 0.0);
}

TEST(KernelBasis, So3AtomsAreScaledConjugateWignerBlocks) {
  const LayerSpec l = make_layer(LayerKind::kSo3So3, 1, 1, 5, 5, 0.7, {2, 2, 3});
  const KernelBasis basis(l);
  ASSERT_EQ(basis.weight_count(), 12u);
  for (std::size_t p = 0; p < basis.weight_count(); ++p) {
    std::vector<double> w(basis.weight_count(), 0.0);
    w[p] = 1.0;
    const So3Spectrum k = basis.to_so3_spectrum(w).spectrum;
    double err = 0.0;
    for (int ell = 0; ell < 5; ++ell) {
      const WignerBlock D = wigner_D(ell, basis.support().points[p]);
      for (int m = -ell; m <= ell; ++m)
        for (int n = -ell; n <= ell; ++n) {
          const Complex want = (2.0 * ell + 1.0) / kSo3Volume * std::conj(D(m, n));
          err = std::max(err, std::abs(k.at(0, ell, m, n) - want));
        }
    }
    EXPECT_LT(err, 1e-13) << "point " << p;
  }
}

TEST(KernelBasis, IdentityAtomIsTruncatedDelta) {
  // beta_max tiny and a single point: the atom approaches the delta at e.
  LayerSpec l = make_layer(LayerKind::kSo3So3, 1, 1, 4, 4, 1e-12, {1, 1, 1});
  const KernelBasis basis(l);
  const So3Spectrum k = basis.to_so3_spectrum(std::vector<double>{1.0}).spectrum;
  for (int ell = 0; ell < 4; ++ell)
    for (int m = -ell; m <= ell; ++m)
      for (int n = -ell; n <= ell; ++n) {
        const double want = m == n ? (2.0 * ell + 1.0) / kSo3Volume : 0.0;
        EXPECT_NEAR(std::abs(k.at(0, ell, m, n) - want), 0.0, 1e-12);
      }
}

TEST(KernelBasis, S2AtomsAreConjugateHarmonics) {
  const LayerSpec l = make_layer(LayerKind::kS2So3, 1, 2, 6, 6, 0.9, {4, 3, 8});
  const KernelBasis basis(l);
  ASSERT_EQ(basis.support().size(), 12u);
  ASSERT_EQ(basis.weight_count(), 24u);
  Rng rng(3);
  std::vector<double> w(basis.weight_count());
  for (auto& v : w) v = rng.normal();
  const S2Spectrum k = basis.to_s2_spectrum(w).spectrum;
  double err = 0.0;
  for (int c = 0; c < 2; ++c)
    for (int ell = 0; ell < 6; ++ell)
      for (int n = -ell; n <= ell; ++n) {
        Complex want{};
        for (std::size_t p = 0; p < 12; ++p) {
          const EulerAngles& g = basis.support().points[p];
          want += w[c * 12 + p] * std::conj(spherical_harmonic(ell, n, g.beta, g.alpha));
        }
        err = std::max(err, std::abs(k.at(c, ell, n) - want));
      }
  EXPECT_LT(err, 1e-12);
}

TEST(KernelBasis, Linearity) {
  const LayerSpec l = make_layer(LayerKind::kSo3S2, 2, 2, 6, 6, 0.5, {8, 3, 8});
  const KernelBasis basis(l);
  Rng rng(4);
  std::vector<double> a(basis.weight_count()), b(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = rng.normal();
    ab[i] = a[i] + b[i];
  }
  const auto ka = basis.to_so3_spectrum(a).spectrum.coeffs;
  const auto kb = basis.to_so3_spectrum(b).spectrum.coeffs;
  auto kab = basis.to_so3_spectrum(ab).spectrum.coeffs;
  for (std::size_t i = 0; i < kab.size(); ++i) kab[i] -= ka[i] + kb[i];
  EXPECT_LT(max_abs(kab), 1e-13);
}

TEST(KernelBasis, AdjointsAreTransposes) {
  Rng rng(5);
  for (LayerKind kind : {LayerKind::kS2So3, LayerKind::kSo3So3}) {
    const LayerSpec l = make_layer(kind, 2, 3, 5, 4, 0.6, {3, 2, 4});
    const KernelBasis basis(l);
    std::vector<double> w(basis.weight_count());
    for (auto& v : w) v = rng.normal();
    std::vector<double> adj(w.size(), 0.0);
    double lhs = 0.0;
    if (kind == LayerKind::kS2So3) {
      const KernelSpectrumS2 k = basis.to_s2_spectrum(w);
      KernelSpectrumS2 g{3, 2, testing::random_s2_spectrum(4, 6, rng)};
      for (std::size_t i = 0; i < g.spectrum.coeffs.size(); ++i) {
        lhs += (std::conj(g.spectrum.coeffs[i]) * k.spectrum.coeffs[i]).real();
      }
      basis.s2_adjoint(g, adj);
    } else {
      const KernelSpectrumSo3 k = basis.to_so3_spectrum(w);
      KernelSpectrumSo3 g{3, 2, testing::random_so3_spectrum(4, 6, rng)};
      for (std::size_t i = 0; i < g.spectrum.coeffs.size(); ++i) {
        lhs += (std::conj(g.spectrum.coeffs[i]) * k.spectrum.coeffs[i]).real();
      }
      basis.so3_adjoint(g, adj);
    }
    double rhs = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) rhs += w[i] * adj[i];
    EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(lhs)) << layer_kind_name(kind);
  }
}

TEST(KernelBasis, CountMismatchThrows) {
  const KernelBasis basis(make_layer(LayerKind::kSo3So3, 1, 1, 3, 3, 0.3));
  EXPECT_THROW(basis.to_so3_spectrum(std::vector<double>(5)), ShapeError);
}

// -------------------------------------------------------------- relu

TEST(Relu, PointwiseCases) {
  SphericalSignal s(Bandlimit(3), 1);
  for (auto& v : s.values) v = -1.5;
  EXPECT_EQ(max_abs(relu_pointwise(s).values), 0.0);
  for (auto& v : s.values) v = 2.0;
  EXPECT_EQ(relu_pointwise(s).values, s.values);
  Rng rng(6);
  for (auto& v : s.values) v = rng.normal();
  const auto r = relu_pointwise(s);
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    EXPECT_NEAR(r.values[i], (s.values[i] + std::abs(s.values[i])) / 2, 1e-15);
  }
}

// -------------------------------------------------------------- loss

TEST(SoftmaxXent, UniformLogitsGiveLogC) {
  SphericalSignal logits(Bandlimit(4), 11);
  for (auto& v : logits.values) v = 0.7;
  Rng rng(7);
  const auto mask = random_mask(logits.plane_size(), 11, rng);
  EXPECT_NEAR(softmax_xent_loss(logits, mask).loss, std::log(11.0), 1e-14);
}

TEST(SoftmaxXent, ConfidentCorrectLogitsGiveZero) {
  SphericalSignal logits(Bandlimit(3), 4);
  const std::vector<std::uint8_t> mask(logits.plane_size(), 2);
  for (std::size_t x = 0; x < logits.plane_size(); ++x) logits.values[2 * logits.plane_size() + x] = 1e3;
  EXPECT_LT(softmax_xent_loss(logits, mask).loss, 1e-300);
}

TEST(SoftmaxXent, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  SphericalSignal logits(Bandlimit(3), 5);
  for (auto& v : logits.values) v = 2.0 * rng.normal();
  const auto mask = random_mask(logits.plane_size(), 5, rng);
  const LossResult r = softmax_xent_loss(logits, mask);
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < logits.values.size(); ++i) {
    SphericalSignal a = logits, b = logits;
    a.values[i] += h;
    b.values[i] -= h;
    const double fd = (softmax_xent_loss(a, mask).loss - softmax_xent_loss(b, mask).loss) / (2 * h);
    worst = std::max(worst, std::abs(fd - r.grad.values[i]));
  }
  EXPECT_LT(worst / max_abs(r.grad.values), 1e-7);
}

TEST(SoftmaxXent, RejectsOutOfRangeTargets) {
  SphericalSignal logits(Bandlimit(2), 3);
  std::vector<std::uint8_t> mask(logits.plane_size(), 0);
  mask[5] = 3;
  EXPECT_THROW(softmax_xent_loss(logits, mask), DomainError);
}

TEST(SoftmaxXent, ScoresGradient) {
  const std::vector<double> s{0.3, -1.0, 2.5};
  std::vector<double> g;
  const double loss = softmax_xent_scores(s, 2, &g);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    auto a = s, b = s;
    a[c] += h;
    b[c] -= h;
    EXPECT_NEAR(g[c], (softmax_xent_scores(a, 2, nullptr) - softmax_xent_scores(b, 2, nullptr)) / (2 * h), 1e-8);
  }
  EXPECT_GT(loss, 0.0);
}

// -------------------------------------------------------------- forward

TEST(Network, ZeroParamsGiveBiasOnlyOutput) {
  const Network net(tiny_segmentation(true));
  std::vector<double> p(net.num_parameters(), 0.0);
  const std::size_t last = net.spec().layers.size() - 1;
  const std::size_t bias = net.layer_offset(last) + net.basis(last).weight_count();
  p[bias] = 0.25;
  p[bias + 1] = -1.5;
  Rng rng(9);
  const ForwardOutput out = net.forward(p, random_input(6, 1, rng));
  for (double v : out.logits.channel(0)) EXPECT_NEAR(v, 0.25, 1e-13);
  for (double v : out.logits.channel(1)) EXPECT_NEAR(v, -1.5, 1e-13);
}

TEST(Network, RejectsMismatchedInput) {
  const Network net(tiny_segmentation(true));
  const std::vector<double> p(net.num_parameters(), 0.0);
  EXPECT_THROW(net.forward(p, SphericalSignal(Bandlimit(5), 1)), ShapeError);
  EXPECT_THROW(net.forward(std::vector<double>(3), SphericalSignal(Bandlimit(6), 1)), ShapeError);
}

TEST(Network, ValidationRejectsBrokenChains) {
  ModelSpec s = tiny_segmentation(true);
  s.layers[1].in_channels = 5;
  EXPECT_THROW(Network{s}, ShapeError);
  s = tiny_segmentation(true);
  s.layers[2].in_bandlimit = 4;
  EXPECT_THROW(Network{s}, ShapeError);
  s = tiny_segmentation(true);
  s.head = Head::kClassification;
  s.num_classes = 3;
  EXPECT_THROW(Network{s}, ShapeError);
}

TEST(Network, LinearModelIsEquivariant) {
  ModelSpec s = tiny_segmentation(false);
  s.layers[0].in_bandlimit = 6;
  const Network net(s);
  Rng rng(10);
  const auto p = random_params(net, rng);
  const S2Spectrum in_spec = random_real_s2_spectrum(6, 1, rng);
  const SphericalSignal out = net.forward(p, s2_synthesize_real(in_spec)).logits;
  const S2Spectrum out_spec = s2_analyze(out);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Rotation R = random_rotation(rng);
    const SphericalSignal rotated_in = s2_synthesize_real(rotate_s2_spectrum(in_spec, R));
    const SphericalSignal a = net.forward(p, rotated_in).logits;
    const SphericalSignal b = s2_synthesize_real(rotate_s2_spectrum(out_spec, R));
    worst = std::max(worst, relative_l2(a.values, b.values));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Network, ClassificationReadoutIsInvariant) {
  ModelSpec s;
  s.relu = false;
  s.head = Head::kClassification;
  s.num_classes = 4;
  s.layers = {make_layer(LayerKind::kS2So3, 1, 3, 6, 5, 0.4), make_layer(LayerKind::kSo3So3, 3, 2, 5, 4, 0.5)};
  const Network net(s);
  Rng rng(11);
  const auto p = random_params(net, rng);
  const S2Spectrum in_spec = random_real_s2_spectrum(6, 1, rng);
  const auto base = net.forward(p, s2_synthesize_real(in_spec)).scores;
  for (int trial = 0; trial < 5; ++trial) {
    const Rotation R = random_rotation(rng);
    const auto r = net.forward(p, s2_synthesize_real(rotate_s2_spectrum(in_spec, R))).scores;
    EXPECT_LT(max_abs_diff(base, r), 1e-10 * max_abs(base));
  }
}

TEST(Network, TimingsCoverEveryLayer) {
  const Network net(tiny_segmentation(true));
  Rng rng(12);
  const auto p = random_params(net, rng);
  LayerTimings t;
  net.forward(p, random_input(6, 1, rng), nullptr, &t);
  ASSERT_EQ(t.seconds.size(), 3u);
  for (const auto& row : t.seconds) EXPECT_GT(row[0] + row[1] + row[2], 0.0);
  EXPECT_GT(t.seconds[0][static_cast<int>(OpCategory::kPointwise)], 0.0);
}

// Pinned by the reference run; guards against unintended numerical changes.
TEST(Network, GoldenOutputHash) {
  const Network net(tiny_segmentation(true));
  Rng rng(2026);
  const auto p = net.init_parameters(rng);
  const auto out = net.forward(p, random_input(6, 1, rng)).logits;
  const std::uint64_t h = io::fnv1a64(out.values.data(), out.values.size() * sizeof(double));
  EXPECT_EQ(h, 14023799442658547151ull);
}

// -------------------------------------------------------------- backward

TEST(Backward, ZeroLossGradientGivesZero) {
  const Network net(tiny_segmentation(true));
  Rng rng(13);
  const auto p = random_params(net, rng);
  Tape tape;
  net.forward(p, random_input(6, 1, rng), &tape);
  ForwardOutput g;
  g.logits = SphericalSignal(Bandlimit(6), 2);
  EXPECT_EQ(max_abs(net.backward(p, tape, g)), 0.0);
}

TEST(Backward, SingleLayerMatchesFiniteDifferences) {
  ModelSpec s;
  s.head = Head::kClassification;
  s.num_classes = 3;
  s.layers = {make_layer(LayerKind::kS2So3, 2, 3, 6, 6, 0.5)};
  const verify::GradientCheck g = verify::gradient_check(s, 1);
  EXPECT_EQ(g.excluded, 0u);
  EXPECT_LT(g.max_rel_error, 1e-6);
}

TEST(Backward, LinearStackMatchesFiniteDifferences) {
  const verify::GradientCheck g = verify::gradient_check(tiny_segmentation(false), 2);
  EXPECT_EQ(g.excluded, 0u);
  EXPECT_LT(g.max_rel_error, 1e-6);
}

TEST(Backward, ReluStackMatchesFiniteDifferences) {
  for (std::uint64_t seed = 3; seed < 8; ++seed) {
    const verify::GradientCheck g = verify::gradient_check(tiny_segmentation(true), seed);
    EXPECT_LT(g.max_rel_error, 1e-5) << "seed " << seed;
    EXPECT_LT(g.excluded * 10, g.checked) << "seed " << seed;
  }
}

TEST(Backward, ReluClassifierMatchesFiniteDifferences) {
  ModelSpec s;
  s.head = Head::kClassification;
  s.num_classes = 3;
  s.layers = {make_layer(LayerKind::kS2So3, 1, 2, 6, 4, 0.5), make_layer(LayerKind::kSo3So3, 2, 3, 4, 3, 0.6)};
  EXPECT_LT(verify::gradient_check(s, 6).max_rel_error, 1e-5);
}

TEST(Backward, RandomTinyModels) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ModelSpec s = verify::random_tiny_spec(seed);
    const verify::GradientCheck g = verify::gradient_check(s, seed);
    EXPECT_LT(g.max_rel_error, 1e-5) << model_spec_to_text(s);
    EXPECT_GT(g.checked, 0u);
  }
}

TEST(Backward, SpectralAccumulationMatchesSum) {
  const Network net(tiny_segmentation(true));
  Rng rng(14);
  const auto p = random_params(net, rng);
  const auto kernels = net.make_kernels(p);
  SpectralGradient total;
  std::vector<double> summed(p.size(), 0.0);
  for (int i = 0; i < 3; ++i) {
    Tape tape;
    const auto out = net.forward(p, kernels, random_input(6, 1, rng), &tape);
    ForwardOutput g;
    g.logits = softmax_xent_loss(out.logits, random_mask(out.logits.plane_size(), 2, rng)).grad;
    total.accumulate(net.backward_spectral(p, tape, g));
    const auto gi = net.backward(p, tape, g);
    for (std::size_t j = 0; j < p.size(); ++j) summed[j] += gi[j];
  }
  EXPECT_LT(max_abs_diff(net.to_parameter_gradient(total), summed), 1e-13 * max_abs(summed));
}

TEST(Backward, StaleTapeThrows) {
  const Network net(tiny_segmentation(true));
  Rng rng(15);
  auto p = random_params(net, rng);
  Tape tape;
  net.forward(p, random_input(6, 1, rng), &tape);
  ForwardOutput g;
  g.logits = SphericalSignal(Bandlimit(6), 2);
  p[0] += 1e-3;
  EXPECT_THROW(net.backward(p, tape, g), StaleTapeError);
  EXPECT_THROW(net.backward(p, Tape{}, g), StaleTapeError);
}

// -------------------------------------------------------------- adam

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  std::vector<double> p{1.0, -2.0, 3.0};
  const auto before = p;
  AdamState st;
  for (int i = 0; i < 5; ++i) adam_step(p, std::vector<double>(3, 0.0), st, {});
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step, 5);
}

TEST(Adam, ConstantGradientStepsApproachLrSign) {
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{0.37, -2.0};
  AdamState st;
  AdamConfig cfg;
  for (int i = 0; i < 2000; ++i) adam_step(p, g, st, cfg);
  const auto before = p;
  adam_step(p, g, st, cfg);
  EXPECT_NEAR(p[0] - before[0], -cfg.lr, 1e-10);
  EXPECT_NEAR(p[1] - before[1], cfg.lr, 1e-10);
}

TEST(Adam, SizeMismatchThrows) {
  std::vector<double> p(3);
  AdamState st;
  EXPECT_THROW(adam_step(p, std::vector<double>(2), st, {}), ShapeError);
}

// -------------------------------------------------------------- counting

ModelSpec table2_204k() {
  const double ref = 0.1238 * kPi;
  auto L = [&](LayerKind k, int ni, int no, int bi, int bo) {
    return make_layer(k, ni, no, bi, bo, 50.0 / bi * ref, SupportCounts{});
  };
  ModelSpec s;
  s.layers = {L(LayerKind::kS2So3, 1, 11, 50, 42),  L(LayerKind::kSo3So3, 11, 12, 42, 35),
              L(LayerKind::kSo3So3, 12, 13, 35, 27), L(LayerKind::kSo3So3, 13, 14, 27, 20),
              L(LayerKind::kSo3So3, 14, 13, 20, 27), L(LayerKind::kSo3So3, 13, 12, 27, 35),
              L(LayerKind::kSo3So3, 12, 11, 35, 42), L(LayerKind::kSo3S2, 11, 11, 42, 50)};
  return s;
}

ModelSpec table2_820k() {
  const double ref = 0.1881 * kPi;
  const int ch[] = {13, 16, 19, 21, 24, 27};
  const int bl[] = {43, 36, 30, 23, 16, 10};
  ModelSpec s;
  s.layers.push_back(make_layer(LayerKind::kS2So3, 1, 13, 50, 43, ref, SupportCounts{}));
  for (int k = 1; k < 6; ++k) {
    s.layers.push_back(
        make_layer(LayerKind::kSo3So3, ch[k - 1], ch[k], bl[k - 1], bl[k], 50.0 / bl[k - 1] * ref, SupportCounts{}));
  }
  for (int k = 4; k >= 0; --k) {
    s.layers.push_back(
        make_layer(LayerKind::kSo3So3, ch[k + 1], ch[k], bl[k + 1], bl[k], 50.0 / bl[k + 1] * ref, SupportCounts{}));
  }
  s.layers.push_back(make_layer(LayerKind::kSo3S2, 13, 11, 43, 50, 50.0 / 43 * ref, SupportCounts{}));
  return s;
}

TEST(CountParameters, SingleLayerArithmetic) {
  ModelSpec s;
  s.head = Head::kClassification;
  s.num_classes = 0;
  s.layers = {make_layer(LayerKind::kSo3So3, 1, 2, 4, 4, 0.3, {4, 2, 4})};
  // Classification with zero classes only counts the layer.
  EXPECT_EQ(count_parameters(s), 66u);
  s.layers[0].out_channels = 4;
  EXPECT_EQ(count_parameters(s), 132u);
}

TEST(CountParameters, Table2Models) {
  EXPECT_EQ(count_parameters(table2_204k()), 204073u);
  EXPECT_EQ(count_parameters(table2_820k()), 820184u);
  EXPECT_NO_THROW(validate_model_spec(table2_204k()));
  EXPECT_NO_THROW(validate_model_spec(table2_820k()));
}

TEST(CountParameters, Table2BetaProducts) {
  // Kernel size in grid cells stays fixed: beta_hat_i * b_i is constant.
  const double beta[] = {0.1238, 0.1474, 0.1768, 0.2292, 0.3095, 0.2292, 0.1768, 0.1474};
  const ModelSpec s = table2_204k();
  for (std::size_t i = 0; i < s.layers.size(); ++i) {
    EXPECT_NEAR(s.layers[i].beta_hat / kPi, beta[i], 6e-5) << "layer " << i;
  }
}

// -------------------------------------------------------------- sampler

TEST(Sampler, AcceptedSpecsSatisfyContract) {
  SamplerConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const ModelSpec s = sample_equivariant_architecture(cfg, rng);
    ASSERT_NO_THROW(validate_model_spec(s)) << "seed " << seed;
    const std::size_t n = count_parameters(s);
    EXPECT_GE(n, cfg.param_lo);
    EXPECT_LE(n, cfg.param_hi);
    const double product = s.layers[0].beta_hat * s.layers[0].in_bandlimit;
    std::vector<int> bl;
    for (const LayerSpec& l : s.layers) {
      EXPECT_NEAR(l.beta_hat * l.in_bandlimit, product, 1e-12 * product);
      bl.push_back(l.in_bandlimit);
    }
    bl.push_back(s.layers.back().out_bandlimit);
    const std::size_t mid = bl.size() / 2;
    for (std::size_t i = 0; i + 1 <= mid; ++i) EXPECT_GE(bl[i], bl[i + 1]);
    for (std::size_t i = 0; i < bl.size(); ++i) EXPECT_EQ(bl[i], bl[bl.size() - 1 - i]);
  }
}

TEST(Sampler, IsDeterministicPerSeed) {
  Rng a(77), b(77);
  EXPECT_EQ(model_spec_to_text(sample_equivariant_architecture({}, a)),
            model_spec_to_text(sample_equivariant_architecture({}, b)));
}

TEST(Sampler, ExhaustedBudgetThrows) {
  SamplerConfig cfg;
  cfg.param_lo = 10;
  cfg.param_hi = 11;
  cfg.max_attempts = 50;
  Rng rng(1);
  EXPECT_THROW(sample_equivariant_architecture(cfg, rng), SamplingError);
  cfg.param_hi = 5;
  EXPECT_THROW(sample_equivariant_architecture(cfg, rng), DomainError);
}

// -------------------------------------------------------------- files

TEST(ModelFile, TextRoundTrip) {
  Rng rng(16);
  const ModelSpec s = sample_equivariant_architecture({}, rng);
  const std::string text = model_spec_to_text(s);
  const ModelSpec back = parse_model_spec(text);
  EXPECT_EQ(model_spec_to_text(back), text);
  for (std::size_t i = 0; i < s.layers.size(); ++i) EXPECT_EQ(back.layers[i].beta_hat, s.layers[i].beta_hat);
}

TEST(ModelFile, BinaryRoundTripIsExact) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "sphseg_model_test.sphm").string();
  const Network net(tiny_segmentation(true));
  Rng rng(17);
  ModelFile m{net.spec(), net.init_parameters(rng), std::nullopt};
  AdamState st;
  std::vector<double> g(m.params.size());
  for (auto& v : g) v = rng.normal();
  adam_step(m.params, g, st, {});
  m.optimizer = st;
  save_model(path, m);
  const ModelFile back = load_model(path);
  EXPECT_EQ(back.params, m.params);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(*back.optimizer, st);
  EXPECT_EQ(model_spec_to_text(back.spec), model_spec_to_text(m.spec));
  std::filesystem::remove(path);
}

TEST(ModelFile, RejectsCorruptFiles) {
  const std::string path = (std::filesystem::temp_directory_path() / "sphseg_bad.sphm").string();
  {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("SPHX", f);
    std::fclose(f);
  }
  EXPECT_THROW(load_model(path), FormatError);
  const Network net(tiny_segmentation(true));
  save_model(path, {net.spec(), std::vector<double>(net.num_parameters(), 1.0), std::nullopt});
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 9);
  EXPECT_THROW(load_model(path), FormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), std::ios_base::failure);
}

}  // namespace
}  // namespace sphseg
