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
#include "sphseg/verify.hpp"

#include <algorithm>
#include <cmath>

#include "sphseg/transforms.hpp"

namespace sphseg::verify {
namespace {

Complex normal_complex(Rng& rng) { return {rng.normal(), rng.normal()}; }

// Real signal with a random conjugate-symmetric spectrum below L.
SphericalSignal random_bandlimited_input(int L, int channels, Rng& rng) {
  S2Spectrum s(Bandlimit(L), channels);
  for (int c = 0; c < channels; ++c)
    for (int l = 0; l < L; ++l) {
      s.at(c, l, 0) = rng.normal();
      for (int m = 1; m <= l; ++m) {
        s.at(c, l, m) = normal_complex(rng) / std::sqrt(2.0);
        s.at(c, l, -m) = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(s.at(c, l, m));
      }
    }
  return s2_synthesize_real(s);
}

std::vector<bool> relu_mask(const Tape& tape) {
  std::vector<bool> mask;
  for (const LayerTape& lt : tape.layers)
    for (double v : lt.pre_activation.values) mask.push_back(v > 0.0);
  return mask;
}

struct LossProbe {
  const Network& net;
  const SphericalSignal& input;
  const std::vector<std::uint8_t>& target;
  int label;

  double operator()(std::span<const double> p, Tape* tape, ForwardOutput* grad) const {
    const ForwardOutput out = net.forward(p, input, tape);
    if (net.spec().head == Head::kSegmentation) {
      LossResult r = softmax_xent_loss(out.logits, target);
      if (grad != nullptr) grad->logits = std::move(r.grad);
      return r.loss;
    }
    std::vector<double> g;
    const double loss = softmax_xent_scores(out.scores, label, grad != nullptr ? &g : nullptr);
    if (grad != nullptr) grad->scores = std::move(g);
    return loss;
  }
};

}  // namespace

ModelSpec random_tiny_spec(std::uint64_t seed, int L) {
  Rng rng(seed);
  ModelSpec spec;
  spec.relu = rng.uniform() < 0.75;
  spec.head = rng.uniform() < 0.7 ? Head::kSegmentation : Head::kClassification;
  const int depth = static_cast<int>(rng.uniform_int(spec.head == Head::kSegmentation ? 2 : 1, 3));
  const SupportCounts support{static_cast<int>(rng.uniform_int(1, 3)), static_cast<int>(rng.uniform_int(1, 2)),
                              static_cast<int>(rng.uniform_int(1, 3))};
  int channels = static_cast<int>(rng.uniform_int(1, 2));
  int bandlimit = L;
  for (int i = 0; i < depth; ++i) {
    LayerSpec l;
    const bool last = i + 1 == depth;
    l.kind = i == 0 ? LayerKind::kS2So3
                    : (last && spec.head == Head::kSegmentation ? LayerKind::kSo3S2 : LayerKind::kSo3So3);
    l.in_channels = channels;
    l.out_channels = static_cast<int>(rng.uniform_int(1, 3));
    l.in_bandlimit = bandlimit;
    l.out_bandlimit = l.kind == LayerKind::kSo3S2 ? L : static_cast<int>(rng.uniform_int(2, L));
    l.beta_hat = rng.uniform(0.1, 0.8);
    l.support = support;
    spec.layers.push_back(l);
    channels = l.out_channels;
    bandlimit = l.out_bandlimit;
  }
  if (spec.head == Head::kSegmentation && spec.layers.back().out_channels < 2) spec.layers.back().out_channels = 2;
  spec.num_classes = spec.head == Head::kClassification ? static_cast<int>(rng.uniform_int(2, 4)) : 0;
  validate_model_spec(spec);
  return spec;
}

GradientCheck gradient_check(const ModelSpec& spec, std::uint64_t seed, double h) {
  const Network net(spec);
  Rng rng(seed ^ 0x5eedull);
  std::vector<double> p(net.num_parameters());
  for (double& v : p) v = 0.5 * rng.normal();
  const LayerSpec& first = spec.layers.front();
  const SphericalSignal x = random_bandlimited_input(first.in_bandlimit, first.in_channels, rng);
  std::vector<std::uint8_t> target;
  int label = 0;
  if (spec.head == Head::kSegmentation) {
    target.resize(x.plane_size());
    for (auto& t : target) t = static_cast<std::uint8_t>(rng.uniform_int(0, spec.layers.back().out_channels - 1));
  } else {
    label = static_cast<int>(rng.uniform_int(0, spec.num_classes - 1));
  }
  const LossProbe loss{net, x, target, label};

  Tape tape;
  ForwardOutput dout;
  loss(p, &tape, &dout);
  const std::vector<double> analytic = net.backward(p, tape, dout);
  const std::vector<bool> base_mask = relu_mask(tape);

  GradientCheck r;
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    Tape up_tape, down_tape;
    p[i] = keep + h;
    const double up = loss(p, &up_tape, nullptr);
    p[i] = keep - h;
    const double down = loss(p, &down_tape, nullptr);
    p[i] = keep;
    const double numeric = (up - down) / (2 * h);
    scale = std::max(scale, std::abs(numeric));
    if (relu_mask(up_tape) != base_mask || relu_mask(down_tape) != base_mask) {
      ++r.excluded;
      continue;
    }
    ++r.checked;
    worst = std::max(worst, std::abs(analytic[i] - numeric));
  }
  r.max_rel_error = scale > 0.0 ? worst / scale : worst;
  return r;
}

}  // namespace sphseg::verify
