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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sphseg/binary_io.hpp"
#include "sphseg/equivariant_ops.hpp"
#include "sphseg/transforms.hpp"
#include "sphseg/wigner.hpp"

namespace sphseg {
namespace {

constexpr std::uint32_t kModelVersion = 1;

SupportCounts effective_counts(const LayerSpec& layer) {
  SupportCounts c = layer.support;
  if (layer.kind == LayerKind::kS2So3) c.n_gamma = 1;
  return c;
}

LayerKind parse_kind(const std::string& s) {
  if (s == "S2SO3conv") return LayerKind::kS2So3;
  if (s == "SO3conv") return LayerKind::kSo3So3;
  if (s == "SO3S2conv") return LayerKind::kSo3S2;
  throw FormatError("unknown layer kind '" + s + "'");
}

class ScopedTimer {
 public:
  ScopedTimer(LayerTimings* t, std::size_t layer, OpCategory cat) : t_(t), layer_(layer), cat_(cat) {
    if (t_ != nullptr) start_ = std::chrono::steady_clock::now();
  }
  ~ScopedTimer() {
    if (t_ != nullptr) {
      t_->add(layer_, cat_, std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count());
    }
  }
  ScopedTimer(const ScopedTimer&) = delete;
  ScopedTimer& operator=(const ScopedTimer&) = delete;

 private:
  LayerTimings* t_;
  std::size_t layer_;
  OpCategory cat_;
  std::chrono::steady_clock::time_point start_;
};

// numpy.linspace(start, stop, num)[k] truncated to int.
int linspace_int(double start, double stop, int num, int k) {
  if (k == num - 1) return static_cast<int>(stop);
  const double step = (stop - start) / (num - 1);
  return static_cast<int>(start + k * step);
}

// Cross-entropy of one score vector. On return z holds d loss / d score.
// The off-target mass is summed on its own so a confident correct prediction
// keeps full relative precision in loss and gradient.
double xent_point(std::span<double> z, int label) {
  const double zmax = *std::max_element(z.begin(), z.end());
  const double zy = z[label];
  double rest = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    z[c] = std::exp(z[c] - zmax);
    if (static_cast<int>(c) != label) rest += z[c];
  }
  const double sum = z[label] + rest;
  for (double& v : z) v /= sum;
  z[label] = -rest / sum;
  return zy == zmax ? std::log1p(rest) : std::log(sum) + zmax - zy;
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kS2So3:
      return "S2SO3conv";
    case LayerKind::kSo3So3:
      return "SO3conv";
    case LayerKind::kSo3S2:
      return "SO3S2conv";
  }
  return "?";
}

std::size_t LayerSpec::support_size() const {
  const SupportCounts c = effective_counts(*this);
  return static_cast<std::size_t>(c.n_alpha) * c.n_beta * c.n_gamma;
}

void validate_model_spec(const ModelSpec& spec) {
  if (spec.layers.empty()) throw ShapeError("model has no layers");
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) + "): ";
    if (l.in_channels < 1 || l.out_channels < 1) throw ShapeError(where + "channel counts must be >= 1");
    if (l.in_bandlimit < 1 || l.out_bandlimit < 1) throw ShapeError(where + "bandlimits must be >= 1");
    if (!(l.beta_hat > 0.0) || l.beta_hat > kPi) throw ShapeError(where + "beta_hat must lie in (0, pi]");
    if (l.support.n_alpha < 1 || l.support.n_beta < 1 || l.support.n_gamma < 1) {
      throw ShapeError(where + "support counts must be >= 1");
    }
    if ((i == 0) != (l.kind == LayerKind::kS2So3)) {
      throw ShapeError(where + "the lifting layer must come first and only first");
    }
    if (l.kind == LayerKind::kSo3S2 && i + 1 != spec.layers.size()) {
      throw ShapeError(where + "the SO(3)->S^2 layer must be last");
    }
    if (i > 0) {
      const LayerSpec& p = spec.layers[i - 1];
      if (p.out_channels != l.in_channels) throw ShapeError(where + "input channels do not match previous layer");
      if (p.out_bandlimit != l.in_bandlimit) throw ShapeError(where + "input bandlimit does not match previous layer");
    }
  }
  const LayerKind last = spec.layers.back().kind;
  if (spec.head == Head::kSegmentation && last != LayerKind::kSo3S2) {
    throw ShapeError("segmentation models must end with an SO3S2conv layer");
  }
  if (spec.head == Head::kClassification) {
    if (last == LayerKind::kSo3S2) throw ShapeError("classification models must end on SO(3)");
    if (spec.num_classes < 1) throw ShapeError("classification head needs num_classes >= 1");
  }
}

std::string model_spec_to_text(const ModelSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "sphseg-model 1\n";
  out << "head " << (spec.head == Head::kSegmentation ? "segmentation" : "classification") << "\n";
  out << "num_classes " << spec.num_classes << "\n";
  out << "relu " << (spec.relu ? 1 : 0) << "\n";
  out << "layers " << spec.layers.size() << "\n";
  for (const LayerSpec& l : spec.layers) {
    out << "layer " << layer_kind_name(l.kind) << ' ' << l.in_channels << ' ' << l.out_channels << ' '
        << l.in_bandlimit << ' ' << l.out_bandlimit << ' ' << l.beta_hat << ' ' << l.support.n_alpha << ' '
        << l.support.n_beta << ' ' << l.support.n_gamma << "\n";
  }
  return out.str();
}

ModelSpec parse_model_spec(const std::string& text) {
  std::istringstream in(text);
  auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw FormatError(std::string("model spec: expected '") + key + "'");
  };
  ModelSpec spec;
  int version = 0;
  expect("sphseg-model");
  if (!(in >> version) || version != 1) throw FormatError("model spec: unsupported version");
  expect("head");
  std::string head;
  in >> head;
  if (head == "segmentation") {
    spec.head = Head::kSegmentation;
  } else if (head == "classification") {
    spec.head = Head::kClassification;
  } else {
    throw FormatError("model spec: unknown head '" + head + "'");
  }
  expect("num_classes");
  in >> spec.num_classes;
  expect("relu");
  int relu = 1;
  in >> relu;
  spec.relu = relu != 0;
  expect("layers");
  std::size_t n = 0;
  if (!(in >> n)) throw FormatError("model spec: bad layer count");
  for (std::size_t i = 0; i < n; ++i) {
    expect("layer");
    LayerSpec l;
    std::string kind;
    in >> kind;
    l.kind = parse_kind(kind);
    in >> l.in_channels >> l.out_channels >> l.in_bandlimit >> l.out_bandlimit >> l.beta_hat >> l.support.n_alpha >>
        l.support.n_beta >> l.support.n_gamma;
    if (!in) throw FormatError("model spec: malformed layer line " + std::to_string(i));
    spec.layers.push_back(l);
  }
  return spec;
}

std::size_t count_parameters(const ModelSpec& spec) {
  std::size_t n = 0;
  for (const LayerSpec& l : spec.layers) {
    n += static_cast<std::size_t>(l.in_channels) * l.out_channels * l.support_size() + l.out_channels;
  }
  if (spec.head == Head::kClassification && !spec.layers.empty()) {
    n += static_cast<std::size_t>(spec.num_classes) * (spec.layers.back().out_channels + 1);
  }
  return n;
}

// ------------------------------------------------------------------ kernels

KernelBasis::KernelBasis(const LayerSpec& layer)
    : layer_(layer),
      L_(layer.conv_bandlimit()),
      support_(make_kernel_support_grid(Bandlimit(layer.conv_bandlimit()), layer.beta_hat, effective_counts(layer))) {
  const SupportCounts c = support_.counts;
  rings_ = c.n_beta;
  per_ring_ = c.n_alpha * c.n_gamma;
  const int M = 2 * L_ - 1;
  alpha_phase_.resize(support_.size() * M);
  gamma_phase_.resize(support_.size() * M);
  for (std::size_t p = 0; p < support_.size(); ++p)
    for (int n = -(L_ - 1); n <= L_ - 1; ++n) {
      alpha_phase_[p * M + n + L_ - 1] = std::polar(1.0, n * support_.points[p].alpha);
      gamma_phase_[p * M + n + L_ - 1] = std::polar(1.0, n * support_.points[p].gamma);
    }
  for (int k = 0; k < rings_; ++k) {
    const double beta = support_.points[static_cast<std::size_t>(k) * per_ring_].beta;
    basis_.push_back(layer.kind == LayerKind::kS2So3 ? legendre_table(L_, beta) : wigner_d_table(L_, beta));
  }
}

std::size_t KernelBasis::weight_count() const {
  return static_cast<std::size_t>(layer_.in_channels) * layer_.out_channels * support_.size();
}

KernelSpectrumS2 KernelBasis::to_s2_spectrum(std::span<const double> weights) const {
  if (weights.size() != weight_count()) throw ShapeError("kernel weight count mismatch");
  const int O = layer_.out_channels, I = layer_.in_channels, M = 2 * L_ - 1;
  const std::size_t P = support_.size();
  KernelSpectrumS2 out{O, I, S2Spectrum(Bandlimit(L_), O * I)};
#pragma omp parallel
  {
    std::vector<Complex> W(M);
#pragma omp for schedule(static)
    for (int oi = 0; oi < O * I; ++oi) {
      const double* w = weights.data() + oi * P;
      Complex* dst = out.spectrum.channel(oi);
      for (int k = 0; k < rings_; ++k) {
        std::fill(W.begin(), W.end(), Complex{});
        for (int q = 0; q < per_ring_; ++q) {
          const std::size_t p = static_cast<std::size_t>(k) * per_ring_ + q;
          const Complex* ph = &alpha_phase_[p * M];
          for (int n = 0; n < M; ++n) W[n] += w[p] * std::conj(ph[n]);
        }
        const std::vector<double>& y = basis_[k];
        for (int l = 0; l < L_; ++l)
          for (int n = -l; n <= l; ++n) dst[s2_index(l, n)] += y[s2_index(l, n)] * W[n + L_ - 1];
      }
    }
  }
  return out;
}

void KernelBasis::s2_adjoint(const KernelSpectrumS2& grad, std::span<double> grad_weights) const {
  if (grad_weights.size() != weight_count()) throw ShapeError("kernel weight count mismatch");
  const int O = layer_.out_channels, I = layer_.in_channels, M = 2 * L_ - 1;
  const std::size_t P = support_.size();
#pragma omp parallel
  {
    std::vector<Complex> H(M);
#pragma omp for schedule(static)
    for (int oi = 0; oi < O * I; ++oi) {
      const Complex* g = grad.spectrum.channel(oi);
      double* dw = grad_weights.data() + oi * P;
      for (int k = 0; k < rings_; ++k) {
        std::fill(H.begin(), H.end(), Complex{});
        const std::vector<double>& y = basis_[k];
        for (int l = 0; l < L_; ++l)
          for (int n = -l; n <= l; ++n) H[n + L_ - 1] += y[s2_index(l, n)] * std::conj(g[s2_index(l, n)]);
        for (int q = 0; q < per_ring_; ++q) {
          const std::size_t p = static_cast<std::size_t>(k) * per_ring_ + q;
          const Complex* ph = &alpha_phase_[p * M];
          double acc = 0.0;
          for (int n = 0; n < M; ++n) acc += (H[n] * std::conj(ph[n])).real();
          dw[p] += acc;
        }
      }
    }
  }
}

KernelSpectrumSo3 KernelBasis::to_so3_spectrum(std::span<const double> weights) const {
  if (weights.size() != weight_count()) throw ShapeError("kernel weight count mismatch");
  const int O = layer_.out_channels, I = layer_.in_channels, M = 2 * L_ - 1;
  const std::size_t P = support_.size();
  const int n_alpha = support_.counts.n_alpha, n_gamma = support_.counts.n_gamma;
  KernelSpectrumSo3 out{O, I, So3Spectrum(Bandlimit(L_), O * I)};
#pragma omp parallel
  {
    std::vector<Complex> W(static_cast<std::size_t>(M) * M), T(M);
#pragma omp for schedule(static)
    for (int oi = 0; oi < O * I; ++oi) {
      const double* w = weights.data() + oi * P;
      Complex* dst = out.spectrum.block(oi, 0);
      for (int k = 0; k < rings_; ++k) {
        // W(m, n) = sum_{a,c} w exp(i m alpha_a) exp(i n gamma_{a,c})
        std::fill(W.begin(), W.end(), Complex{});
        for (int a = 0; a < n_alpha; ++a) {
          std::fill(T.begin(), T.end(), Complex{});
          const std::size_t p0 = static_cast<std::size_t>(k) * per_ring_ + static_cast<std::size_t>(a) * n_gamma;
          for (int c = 0; c < n_gamma; ++c) {
            const Complex* ph = &gamma_phase_[(p0 + c) * M];
            for (int n = 0; n < M; ++n) T[n] += w[p0 + c] * ph[n];
          }
          const Complex* pa = &alpha_phase_[p0 * M];
          for (int m = 0; m < M; ++m) {
            Complex* row = &W[static_cast<std::size_t>(m) * M];
            for (int n = 0; n < M; ++n) row[n] += pa[m] * T[n];
          }
        }
        const std::vector<double>& d = basis_[k];
        for (int l = 0; l < L_; ++l) {
          const double s = (2.0 * l + 1.0) / kSo3Volume;
          for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n) {
              const std::size_t idx = so3_index(l, m, n);
              dst[idx] += s * d[idx] * W[static_cast<std::size_t>(m + L_ - 1) * M + (n + L_ - 1)];
            }
        }
      }
    }
  }
  return out;
}

void KernelBasis::so3_adjoint(const KernelSpectrumSo3& grad, std::span<double> grad_weights) const {
  if (grad_weights.size() != weight_count()) throw ShapeError("kernel weight count mismatch");
  const int O = layer_.out_channels, I = layer_.in_channels, M = 2 * L_ - 1;
  const std::size_t P = support_.size();
  const int n_alpha = support_.counts.n_alpha, n_gamma = support_.counts.n_gamma;
#pragma omp parallel
  {
    std::vector<Complex> H(static_cast<std::size_t>(M) * M), U(M);
#pragma omp for schedule(static)
    for (int oi = 0; oi < O * I; ++oi) {
      const Complex* g = grad.spectrum.block(oi, 0);
      double* dw = grad_weights.data() + oi * P;
      for (int k = 0; k < rings_; ++k) {
        // H(m, n) = sum_l s_l d^l_{mn}(beta_k) conj(G^l_{mn})
        std::fill(H.begin(), H.end(), Complex{});
        const std::vector<double>& d = basis_[k];
        for (int l = 0; l < L_; ++l) {
          const double s = (2.0 * l + 1.0) / kSo3Volume;
          for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n) {
              const std::size_t idx = so3_index(l, m, n);
              H[static_cast<std::size_t>(m + L_ - 1) * M + (n + L_ - 1)] += s * d[idx] * std::conj(g[idx]);
            }
        }
        for (int a = 0; a < n_alpha; ++a) {
          const std::size_t p0 = static_cast<std::size_t>(k) * per_ring_ + static_cast<std::size_t>(a) * n_gamma;
          const Complex* pa = &alpha_phase_[p0 * M];
          // U(n) = sum_m exp(i m alpha_a) H(m, n)
          std::fill(U.begin(), U.end(), Complex{});
          for (int m = 0; m < M; ++m) {
            const Complex* row = &H[static_cast<std::size_t>(m) * M];
            for (int n = 0; n < M; ++n) U[n] += pa[m] * row[n];
          }
          for (int c = 0; c < n_gamma; ++c) {
            const Complex* ph = &gamma_phase_[(p0 + c) * M];
            double acc = 0.0;
            for (int n = 0; n < M; ++n) acc += (U[n] * ph[n]).real();
            dw[p0 + c] += acc;
          }
        }
      }
    }
  }
}

KernelSpectrumS2 kernel_weights_to_spectrum_s2(const LayerSpec& layer, std::span<const double> weights) {
  if (layer.kind != LayerKind::kS2So3) throw ShapeError("S^2 kernels belong to S2SO3conv layers");
  return KernelBasis(layer).to_s2_spectrum(weights);
}

KernelSpectrumSo3 kernel_weights_to_spectrum_so3(const LayerSpec& layer, std::span<const double> weights) {
  if (layer.kind == LayerKind::kS2So3) throw ShapeError("SO(3) kernels belong to SO3conv / SO3S2conv layers");
  return KernelBasis(layer).to_so3_spectrum(weights);
}

// ------------------------------------------------------------------ network

void SpectralGradient::accumulate(const SpectralGradient& other) {
  if (kernels.empty()) {
    *this = other;
    return;
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    auto& a = kernels[i].s2.spectrum.coeffs;
    const auto& b = other.kernels[i].s2.spectrum.coeffs;
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += b[j];
    auto& c = kernels[i].so3.spectrum.coeffs;
    const auto& d = other.kernels[i].so3.spectrum.coeffs;
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += d[j];
  }
  for (std::size_t j = 0; j < direct.size(); ++j) direct[j] += other.direct[j];
}

std::uint64_t parameter_hash(std::span<const double> params) {
  return io::fnv1a64(params.data(), params.size() * sizeof(double));
}

Network::Network(ModelSpec spec) : spec_(std::move(spec)) {
  validate_model_spec(spec_);
  std::size_t off = 0;
  for (const LayerSpec& l : spec_.layers) {
    bases_.emplace_back(l);
    offsets_.push_back(off);
    off += bases_.back().weight_count() + l.out_channels;
  }
  head_offset_ = off;
  num_params_ = count_parameters(spec_);
}

std::vector<double> Network::init_parameters(Rng& rng) const {
  std::vector<double> p(num_params_, 0.0);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const double sigma = std::sqrt(2.0 / (l.in_channels * static_cast<double>(l.support_size())));
    for (std::size_t j = 0; j < bases_[i].weight_count(); ++j) p[offsets_[i] + j] = sigma * rng.normal();
  }
  if (spec_.head == Head::kClassification) {
    const int C = spec_.layers.back().out_channels;
    const double sigma = 1.0 / (kSo3Volume * std::sqrt(static_cast<double>(C)));
    for (int j = 0; j < spec_.num_classes * C; ++j) p[head_offset_ + j] = sigma * rng.normal();
  }
  return p;
}

std::shared_ptr<const KernelSet> Network::make_kernels(std::span<const double> params) const {
  if (params.size() != num_params_) {
    throw ShapeError("parameter vector has " + std::to_string(params.size()) + " entries, model needs " +
                     std::to_string(num_params_));
  }
  auto ks = std::make_shared<KernelSet>(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto w = params.subspan(offsets_[i], bases_[i].weight_count());
    if (spec_.layers[i].kind == LayerKind::kS2So3) {
      (*ks)[i].s2 = bases_[i].to_s2_spectrum(w);
    } else {
      (*ks)[i].so3 = bases_[i].to_so3_spectrum(w);
    }
  }
  return ks;
}

ForwardOutput Network::forward(std::span<const double> params, const SphericalSignal& input, Tape* tape,
                               LayerTimings* timings) const {
  std::shared_ptr<const KernelSet> ks;
  {
    if (timings != nullptr && timings->seconds.size() < spec_.layers.size()) timings->seconds.resize(spec_.layers.size());
    // Kernel construction is a block product per layer; attribute it to the
    // layer it serves.
    if (timings == nullptr) {
      ks = make_kernels(params);
    } else {
      auto k = std::make_shared<KernelSet>(spec_.layers.size());
      if (params.size() != num_params_) throw ShapeError("parameter vector size mismatch");
      for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        ScopedTimer t(timings, i, OpCategory::kBlockMultiply);
        const auto w = params.subspan(offsets_[i], bases_[i].weight_count());
        if (spec_.layers[i].kind == LayerKind::kS2So3) {
          (*k)[i].s2 = bases_[i].to_s2_spectrum(w);
        } else {
          (*k)[i].so3 = bases_[i].to_so3_spectrum(w);
        }
      }
      ks = std::move(k);
    }
  }
  return forward(params, std::move(ks), input, tape, timings);
}

ForwardOutput Network::forward(std::span<const double> params, std::shared_ptr<const KernelSet> kernels,
                               const SphericalSignal& input, Tape* tape, LayerTimings* timings) const {
  const LayerSpec& first = spec_.layers.front();
  if (params.size() != num_params_) throw ShapeError("parameter vector size mismatch");
  if (input.L.value() != first.in_bandlimit || input.channels != first.in_channels) {
    throw ShapeError("input signal (L=" + std::to_string(input.L.value()) + ", C=" + std::to_string(input.channels) +
                     ") does not match the first layer (L=" + std::to_string(first.in_bandlimit) +
                     ", C=" + std::to_string(first.in_channels) + ")");
  }
  if (timings != nullptr && timings->seconds.size() < spec_.layers.size()) timings->seconds.resize(spec_.layers.size());
  if (tape != nullptr) {
    tape->param_hash = parameter_hash(params);
    tape->kernels = kernels;
    tape->layers.assign(spec_.layers.size(), LayerTape{});
    tape->features.clear();
  }

  ForwardOutput out;
  S2Spectrum s2_in;
  So3Spectrum cur;
  {
    ScopedTimer t(timings, 0, OpCategory::kTransform);
    s2_in = s2_analyze(input);
  }
  for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
    const LayerSpec& layer = spec_.layers[li];
    const Bandlimit Lc(layer.conv_bandlimit());
    const Bandlimit Lo(layer.out_bandlimit);
    const double* bias = params.data() + offsets_[li] + bases_[li].weight_count();
    So3Spectrum y;
    {
      ScopedTimer t(timings, li, OpCategory::kBlockMultiply);
      if (layer.kind == LayerKind::kS2So3) {
        S2Spectrum f = resample_bandlimit_s2(s2_in, Lc);
        y = conv_s2_to_so3((*kernels)[li].s2, f);
        if (tape != nullptr) tape->layers[li].s2_input = std::move(f);
      } else {
        So3Spectrum f = resample_bandlimit_so3(cur, Lc);
        y = conv_so3((*kernels)[li].so3, f);
        if (tape != nullptr) tape->layers[li].so3_input = std::move(f);
      }
    }
    if (layer.kind == LayerKind::kSo3S2) {
      S2Spectrum g;
      {
        ScopedTimer t(timings, li, OpCategory::kBlockMultiply);
        g = so3_to_s2_final_spectrum(y);
        for (int o = 0; o < layer.out_channels; ++o) g.at(o, 0, 0) += bias[o] * std::sqrt(4.0 * kPi);
      }
      ScopedTimer t(timings, li, OpCategory::kTransform);
      out.logits = s2_synthesize_real(resample_bandlimit_s2(g, Lo));
      break;
    }
    {
      ScopedTimer t(timings, li, OpCategory::kBlockMultiply);
      for (int o = 0; o < layer.out_channels; ++o) y.at(o, 0, 0, 0) += bias[o];
    }
    y = resample_bandlimit_so3(y, Lo);
    const bool last = li + 1 == spec_.layers.size();
    if (last) {
      // Classification head: invariant readout and a dense affine map.
      ScopedTimer t(timings, li, OpCategory::kBlockMultiply);
      const std::vector<double> feat = invariant_readout(y);
      const int C = layer.out_channels;
      const double* W = params.data() + head_offset_;
      const double* b = W + static_cast<std::size_t>(spec_.num_classes) * C;
      out.scores.assign(spec_.num_classes, 0.0);
      for (int k = 0; k < spec_.num_classes; ++k) {
        double s = b[k];
        for (int j = 0; j < C; ++j) s += W[static_cast<std::size_t>(k) * C + j] * feat[j];
        out.scores[k] = s;
      }
      if (tape != nullptr) tape->features = feat;
      break;
    }
    if (spec_.relu) {
      So3Signal sig;
      {
        ScopedTimer t(timings, li, OpCategory::kTransform);
        sig = so3_synthesize_real(y);
      }
      So3Signal act;
      {
        ScopedTimer t(timings, li, OpCategory::kPointwise);
        act = relu_pointwise(sig);
      }
      {
        ScopedTimer t(timings, li, OpCategory::kTransform);
        cur = so3_analyze(act);
      }
      if (tape != nullptr) tape->layers[li].pre_activation = std::move(sig);
    } else {
      cur = std::move(y);
    }
  }
  return out;
}

SpectralGradient Network::backward_spectral(std::span<const double> params, const Tape& tape,
                                            const ForwardOutput& grad) const {
  if (params.size() != num_params_) throw ShapeError("parameter vector size mismatch");
  if (tape.kernels == nullptr || tape.layers.size() != spec_.layers.size() ||
      tape.param_hash != parameter_hash(params)) {
    throw StaleTapeError("tape was not recorded with these parameters");
  }
  SpectralGradient out;
  out.kernels.resize(spec_.layers.size());
  out.direct.assign(num_params_, 0.0);

  const std::size_t nl = spec_.layers.size();
  So3Spectrum dy;  // gradient w.r.t. the current layer's SO(3) output at its out bandlimit
  S2Spectrum dg;   // same for the final S^2 layer
  if (spec_.head == Head::kSegmentation) {
    const LayerSpec& last = spec_.layers.back();
    if (grad.logits.L.value() != last.out_bandlimit || grad.logits.channels != last.out_channels) {
      throw ShapeError("logit gradient shape mismatch");
    }
    dg = s2_synthesize_real_adjoint(grad.logits);
  } else {
    const LayerSpec& last = spec_.layers.back();
    const int C = last.out_channels;
    if (grad.scores.size() != static_cast<std::size_t>(spec_.num_classes)) throw ShapeError("score gradient size");
    const double* W = params.data() + head_offset_;
    double* dW = out.direct.data() + head_offset_;
    double* db = dW + static_cast<std::size_t>(spec_.num_classes) * C;
    dy = So3Spectrum(Bandlimit(last.out_bandlimit), C);
    for (int k = 0; k < spec_.num_classes; ++k) {
      db[k] += grad.scores[k];
      for (int j = 0; j < C; ++j) dW[static_cast<std::size_t>(k) * C + j] += grad.scores[k] * tape.features[j];
    }
    for (int j = 0; j < C; ++j) {
      double s = 0.0;
      for (int k = 0; k < spec_.num_classes; ++k) s += W[static_cast<std::size_t>(k) * C + j] * grad.scores[k];
      dy.at(j, 0, 0, 0) = kSo3Volume * s;
    }
  }

  for (std::size_t li = nl; li-- > 0;) {
    const LayerSpec& layer = spec_.layers[li];
    const Bandlimit Lc(layer.conv_bandlimit());
    double* dbias = out.direct.data() + offsets_[li] + bases_[li].weight_count();
    So3Spectrum dconv;
    if (layer.kind == LayerKind::kSo3S2) {
      for (int o = 0; o < layer.out_channels; ++o) dbias[o] += dg.at(o, 0, 0).real() * std::sqrt(4.0 * kPi);
      dconv = so3_to_s2_final_spectrum_adjoint(resample_bandlimit_s2(dg, Lc));
    } else {
      for (int o = 0; o < layer.out_channels; ++o) dbias[o] += dy.at(o, 0, 0, 0).real();
      dconv = resample_bandlimit_so3(dy, Lc);
    }
    const LayerTape& lt = tape.layers[li];
    if (layer.kind == LayerKind::kS2So3) {
      conv_s2_to_so3_backward((*tape.kernels)[li].s2, lt.s2_input, dconv, &out.kernels[li].s2, nullptr);
      break;
    }
    So3Spectrum df;
    conv_so3_backward((*tape.kernels)[li].so3, lt.so3_input, dconv, &out.kernels[li].so3, &df);
    // Gradient w.r.t. this layer's input, which is the previous layer's output
    // after the optional ReLU hop.
    const So3Spectrum dcur = resample_bandlimit_so3(df, Bandlimit(layer.in_bandlimit));
    if (spec_.relu) {
      So3Signal dsig = so3_analyze_adjoint(dcur);
      const So3Signal& pre = tape.layers[li - 1].pre_activation;
      for (std::size_t j = 0; j < dsig.values.size(); ++j)
        if (!(pre.values[j] > 0.0)) dsig.values[j] = 0.0;
      dy = so3_synthesize_real_adjoint(dsig);
    } else {
      dy = dcur;
    }
  }
  return out;
}

std::vector<double> Network::to_parameter_gradient(const SpectralGradient& g) const {
  std::vector<double> out = g.direct;
  for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
    const auto dw = std::span<double>(out).subspan(offsets_[li], bases_[li].weight_count());
    if (spec_.layers[li].kind == LayerKind::kS2So3) {
      if (!g.kernels[li].s2.spectrum.coeffs.empty()) bases_[li].s2_adjoint(g.kernels[li].s2, dw);
    } else {
      if (!g.kernels[li].so3.spectrum.coeffs.empty()) bases_[li].so3_adjoint(g.kernels[li].so3, dw);
    }
  }
  return out;
}

std::vector<double> Network::backward(std::span<const double> params, const Tape& tape,
                                      const ForwardOutput& grad) const {
  return to_parameter_gradient(backward_spectral(params, tape, grad));
}

// ------------------------------------------------------------------ loss

LossResult softmax_xent_loss(const SphericalSignal& logits, std::span<const std::uint8_t> target) {
  const std::size_t N = logits.plane_size();
  const int C = logits.channels;
  if (target.size() != N) throw ShapeError("target mask size does not match the logit grid");
  LossResult r;
  r.grad = SphericalSignal(logits.L, C);
  std::vector<double> z(C);
  double total = 0.0;
  for (std::size_t x = 0; x < N; ++x) {
    if (target[x] >= C) {
      throw DomainError("target class " + std::to_string(target[x]) + " out of range for " + std::to_string(C) +
                        " classes");
    }
    for (int c = 0; c < C; ++c) z[c] = logits.values[c * N + x];
    total += xent_point(z, target[x]);
    for (int c = 0; c < C; ++c) r.grad.values[c * N + x] = z[c] / static_cast<double>(N);
  }
  r.loss = total / static_cast<double>(N);
  return r;
}

double softmax_xent_scores(std::span<const double> scores, int label, std::vector<double>* grad) {
  const int C = static_cast<int>(scores.size());
  if (label < 0 || label >= C) throw DomainError("label out of range");
  std::vector<double> z(scores.begin(), scores.end());
  const double loss = xent_point(z, label);
  if (grad != nullptr) *grad = std::move(z);
  return loss;
}

std::vector<std::uint8_t> argmax_channels(const SphericalSignal& logits) {
  const std::size_t N = logits.plane_size();
  std::vector<std::uint8_t> out(N, 0);
  for (std::size_t x = 0; x < N; ++x) {
    int best = 0;
    for (int c = 1; c < logits.channels; ++c)
      if (logits.values[c * N + x] > logits.values[best * N + x]) best = c;
    out[x] = static_cast<std::uint8_t>(best);
  }
  return out;
}

// ------------------------------------------------------------------ adam

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ShapeError("gradient size does not match parameters");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

// ------------------------------------------------------------------ sampler

ModelSpec sample_equivariant_architecture(const SamplerConfig& cfg, Rng& rng) {
  if (!(cfg.param_lo < cfg.param_hi)) throw DomainError("sampler needs param_lo < param_hi");
  if (cfg.bandlimit < 3) throw DomainError("sampler needs an input bandlimit >= 3");
  const int L = cfg.bandlimit;
  const int max_depth = std::max<int>(1, static_cast<int>(cfg.param_hi / 20000));
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const int depth = static_cast<int>(rng.uniform_int(1, max_depth));
    const int bottleneck = static_cast<int>(rng.uniform_int(3, std::min(20, L)));
    const int max_channels = static_cast<int>(rng.uniform_int(11, 30));
    const double beta_ref = rng.uniform(0.02, 0.25) * kPi;

    std::vector<int> bl(depth), ch(depth);
    for (int k = 1; k <= depth; ++k) {
      bl[k - 1] = linspace_int(L, bottleneck, depth + 1, k);
      ch[k - 1] = linspace_int(11, max_channels, depth + 1, k);
    }
    ModelSpec spec;
    spec.head = Head::kSegmentation;
    spec.relu = true;
    auto add = [&](LayerKind kind, int ni, int no, int bi, int bo) {
      LayerSpec l;
      l.kind = kind;
      l.in_channels = ni;
      l.out_channels = no;
      l.in_bandlimit = bi;
      l.out_bandlimit = bo;
      l.beta_hat = static_cast<double>(L) / bi * beta_ref;
      l.support = cfg.support;
      spec.layers.push_back(l);
    };
    for (int k = 0; k < depth; ++k) {
      add(k == 0 ? LayerKind::kS2So3 : LayerKind::kSo3So3, k == 0 ? cfg.input_channels : ch[k - 1], ch[k],
          k == 0 ? L : bl[k - 1], bl[k]);
    }
    for (int k = depth - 2; k >= 0; --k) add(LayerKind::kSo3So3, ch[k + 1], ch[k], bl[k + 1], bl[k]);
    add(LayerKind::kSo3S2, ch[0], cfg.output_channels, bl[0], L);

    bool ok = true;
    for (const LayerSpec& l : spec.layers) ok = ok && l.beta_hat <= kPi;
    if (!ok) continue;
    const std::size_t n = count_parameters(spec);
    if (n >= cfg.param_lo && n <= cfg.param_hi) return spec;
  }
  throw SamplingError("no architecture in [" + std::to_string(cfg.param_lo) + ", " + std::to_string(cfg.param_hi) +
                      "] after " + std::to_string(cfg.max_attempts) + " attempts");
}

// ------------------------------------------------------------------ model io

void save_model(const std::string& path, const ModelFile& model) {
  if (model.params.size() != count_parameters(model.spec)) {
    throw ShapeError("parameter vector does not match the model spec");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot open " + path + " for writing");
  const std::string text = model_spec_to_text(model.spec);
  out.write("SPHM", 4);
  io::write_pod(out, kModelVersion);
  io::write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  io::write_pod(out, static_cast<std::uint64_t>(model.params.size()));
  io::write_array(out, model.params.data(), model.params.size());
  io::write_pod(out, static_cast<std::uint8_t>(model.optimizer ? 1 : 0));
  if (model.optimizer) {
    io::write_pod(out, model.optimizer->step);
    io::write_pod(out, static_cast<std::uint64_t>(model.optimizer->m.size()));
    io::write_array(out, model.optimizer->m.data(), model.optimizer->m.size());
    io::write_array(out, model.optimizer->v.data(), model.optimizer->v.size());
  }
  if (!out) throw std::ios_base::failure("write failed for " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  io::expect_magic(in, "SPHM");
  const auto version = io::read_pod<std::uint32_t>(in, "version");
  if (version != kModelVersion) throw FormatError("unsupported model version " + std::to_string(version));
  const auto len = io::read_pod<std::uint64_t>(in, "spec length");
  if (len > (1u << 24)) throw FormatError("implausible spec length");
  std::string text(len, '\0');
  io::read_array(in, text.data(), len, "spec");
  ModelFile m;
  m.spec = parse_model_spec(text);
  validate_model_spec(m.spec);
  const auto n = io::read_pod<std::uint64_t>(in, "parameter count");
  if (n != count_parameters(m.spec)) throw FormatError("parameter count does not match the model spec");
  m.params.resize(n);
  io::read_array(in, m.params.data(), n, "parameters");
  if (io::read_pod<std::uint8_t>(in, "optimizer flag") != 0) {
    AdamState s;
    s.step = io::read_pod<std::int64_t>(in, "optimizer step");
    const auto k = io::read_pod<std::uint64_t>(in, "optimizer size");
    if (k != n) throw FormatError("optimizer state size does not match parameters");
    s.m.resize(k);
    s.v.resize(k);
    io::read_array(in, s.m.data(), k, "optimizer m");
    io::read_array(in, s.v.data(), k, "optimizer v");
    m.optimizer = std::move(s);
  }
  return m;
}

}  // namespace sphseg
