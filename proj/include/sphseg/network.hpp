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
// Layer stack built from the spectral operations: lifting convolution,
// group convolutions, the SO(3) -> S^2 final layer, ReLU hops, loss, exact
// reverse-mode gradients, Adam, and the random architecture sampler.
#ifndef SPHSEG_NETWORK_HPP_
#define SPHSEG_NETWORK_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphseg/grid.hpp"
#include "sphseg/rng.hpp"
#include "sphseg/signal.hpp"

namespace sphseg {

enum class LayerKind { kS2So3, kSo3So3, kSo3S2 };
enum class Head { kSegmentation, kClassification };

const char* layer_kind_name(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kSo3So3;
  int in_channels = 1;
  int out_channels = 1;
  int in_bandlimit = 1;
  int out_bandlimit = 1;
  double beta_hat = 0.1;
  SupportCounts support;

  /// Support points of the kernel; S^2 kernels use a single gamma.
  std::size_t support_size() const;
  /// Degrees that survive both the input and the output bandlimit.
  int conv_bandlimit() const { return in_bandlimit < out_bandlimit ? in_bandlimit : out_bandlimit; }
};

struct ModelSpec {
  std::vector<LayerSpec> layers;
  bool relu = true;
  Head head = Head::kSegmentation;
  /// Width of the dense map after the invariant readout (classification only).
  int num_classes = 0;
};

/// Throws ShapeError if channels or bandlimits do not chain, the first layer
/// is not a lifting layer, or the last layer does not match the head.
void validate_model_spec(const ModelSpec& spec);

/// Line-oriented canonical text; doubles are written with 17 significant digits
/// so parse(to_text(s)) reproduces s exactly.
std::string model_spec_to_text(const ModelSpec& spec);
ModelSpec parse_model_spec(const std::string& text);

std::size_t count_parameters(const ModelSpec& spec);

/// Kernel of one layer as a linear function of its support-point weights.
/// Each weight multiplies the delta at its support point, truncated to the
/// convolution bandlimit:
///   S^2:   kappa^l_n    = sum_p w_p conj(Y^l_n(beta_p, alpha_p))
///   SO(3): kappa^l_{mn} = (2l+1)/(8 pi^2) sum_p w_p conj(D^l_{mn}(g_p))
/// Weights are laid out (out_channel, in_channel, point).
class KernelBasis {
 public:
  explicit KernelBasis(const LayerSpec& layer);

  const KernelSupportGrid& support() const { return support_; }
  std::size_t weight_count() const;

  KernelSpectrumS2 to_s2_spectrum(std::span<const double> weights) const;
  KernelSpectrumSo3 to_so3_spectrum(std::span<const double> weights) const;
  /// Transposes: gradient w.r.t. the weights from the gradient of the spectrum.
  void s2_adjoint(const KernelSpectrumS2& grad, std::span<double> grad_weights) const;
  void so3_adjoint(const KernelSpectrumSo3& grad, std::span<double> grad_weights) const;

 private:
  LayerSpec layer_;
  int L_;
  KernelSupportGrid support_;
  int rings_ = 0;
  int per_ring_ = 0;                        // points per beta ring
  std::vector<std::vector<double>> basis_;  // legendre or wigner-d table per beta ring
  std::vector<Complex> alpha_phase_;        // [point][n + L - 1] = exp(i n alpha_p)
  std::vector<Complex> gamma_phase_;        // [point][n + L - 1] = exp(i n gamma_p)
};

KernelSpectrumS2 kernel_weights_to_spectrum_s2(const LayerSpec& layer, std::span<const double> weights);
KernelSpectrumSo3 kernel_weights_to_spectrum_so3(const LayerSpec& layer, std::span<const double> weights);

template <class Field>
Field relu_pointwise(Field f) {
  for (auto& v : f.values) v = v > 0.0 ? v : 0.0;
  return f;
}

enum class OpCategory { kTransform = 0, kBlockMultiply = 1, kPointwise = 2 };

/// Accumulated wall time per layer and operation category.
struct LayerTimings {
  std::vector<std::array<double, 3>> seconds;
  void add(std::size_t layer, OpCategory cat, double s) { seconds[layer][static_cast<int>(cat)] += s; }
};

/// Kernel spectra of every layer for one parameter vector. Only the member
/// matching the layer kind is populated.
struct LayerKernel {
  KernelSpectrumS2 s2;
  KernelSpectrumSo3 so3;
};
using KernelSet = std::vector<LayerKernel>;

struct LayerTape {
  S2Spectrum s2_input;    // lifting layers, at the convolution bandlimit
  So3Spectrum so3_input;  // group and final layers, at the convolution bandlimit
  So3Signal pre_activation;  // output samples before the ReLU hop (empty if none)
};

struct Tape {
  std::uint64_t param_hash = 0;
  std::shared_ptr<const KernelSet> kernels;
  std::vector<LayerTape> layers;
  std::vector<double> features;  // invariant readout (classification head)
};

struct ForwardOutput {
  SphericalSignal logits;      // segmentation head
  std::vector<double> scores;  // classification head
};

/// Gradient before the (linear) weights -> kernel map has been transposed.
/// Summing these over a batch and transposing once is equivalent to summing
/// parameter gradients.
struct SpectralGradient {
  KernelSet kernels;
  std::vector<double> direct;  // biases and dense head, full parameter layout

  void accumulate(const SpectralGradient& other);
};

class StaleTapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A validated model with precomputed kernel bases. Immutable; forward and
/// backward may be called concurrently.
class Network {
 public:
  explicit Network(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  std::size_t num_parameters() const { return num_params_; }
  /// Offset of layer `i`'s weights inside the parameter vector; its biases
  /// follow the weights. The dense head (classification) comes last.
  std::size_t layer_offset(std::size_t i) const { return offsets_[i]; }
  const KernelBasis& basis(std::size_t i) const { return bases_[i]; }

  /// He-style normal init for kernel weights, zero biases.
  std::vector<double> init_parameters(Rng& rng) const;

  std::shared_ptr<const KernelSet> make_kernels(std::span<const double> params) const;

  ForwardOutput forward(std::span<const double> params, const SphericalSignal& input, Tape* tape = nullptr,
                        LayerTimings* timings = nullptr) const;
  /// Same, reusing kernels built by make_kernels(params).
  ForwardOutput forward(std::span<const double> params, std::shared_ptr<const KernelSet> kernels,
                        const SphericalSignal& input, Tape* tape = nullptr, LayerTimings* timings = nullptr) const;

  /// Exact gradient of a scalar loss given its gradient w.r.t. the output
  /// (logits for segmentation, scores for classification). Throws
  /// StaleTapeError if `params` differ from those the tape was recorded with.
  std::vector<double> backward(std::span<const double> params, const Tape& tape, const ForwardOutput& grad) const;
  SpectralGradient backward_spectral(std::span<const double> params, const Tape& tape,
                                     const ForwardOutput& grad) const;
  std::vector<double> to_parameter_gradient(const SpectralGradient& g) const;

 private:
  ModelSpec spec_;
  std::vector<KernelBasis> bases_;
  std::vector<std::size_t> offsets_;
  std::size_t head_offset_ = 0;
  std::size_t num_params_ = 0;
};

std::uint64_t parameter_hash(std::span<const double> params);

struct LossResult {
  double loss = 0.0;
  SphericalSignal grad;  // d loss / d logits
};

/// Mean over grid points of -log softmax(logits)[target]; target is laid out
/// like one channel of the logits.
LossResult softmax_xent_loss(const SphericalSignal& logits, std::span<const std::uint8_t> target);

/// -log softmax(scores)[label] and its gradient.
double softmax_xent_scores(std::span<const double> scores, int label, std::vector<double>* grad);

/// Per grid point argmax over channels.
std::vector<std::uint8_t> argmax_channels(const SphericalSignal& logits);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg);

struct SamplerConfig {
  std::size_t param_lo = 190000;
  std::size_t param_hi = 210000;
  int bandlimit = 50;
  int input_channels = 1;
  int output_channels = 11;
  SupportCounts support;
  int max_attempts = 100000;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hourglass architecture: depth ~ U{1..floor(hi / 2e4)} downsampling layers
/// with bandlimits interpolated from L to a bottleneck ~ U{3..min(20, L)},
/// channels interpolated from 11 to a maximum ~ U{11..30}, mirrored upsampling
/// layers and a final SO(3) -> S^2 layer at L. beta_hat_i = L / b_i * beta_ref
/// with beta_ref ~ U[0.02, 0.25] * pi. Resamples until the parameter count lies
/// in [param_lo, param_hi].
ModelSpec sample_equivariant_architecture(const SamplerConfig& cfg, Rng& rng);

struct ModelFile {
  ModelSpec spec;
  std::vector<double> params;
  std::optional<AdamState> optimizer;
};

void save_model(const std::string& path, const ModelFile& model);
ModelFile load_model(const std::string& path);

}  // namespace sphseg

#endif  // SPHSEG_NETWORK_HPP_
