#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmgpan/tensor.hpp"

namespace fmgpan {

enum class Variant : std::uint8_t { kDefault = 0, kLightweight = 1 };

Variant parse_variant(const std::string& s);
std::string to_string(Variant v);

enum class LayerKind : std::uint8_t { kConv = 0, kDepthwise = 1, kPointwise = 2 };

/// One convolution with its bias. Standard and depthwise layers use 3x3
/// zero-padded cross-correlation; pointwise layers are 1x1.
/// Weight layout: [out, in, k, k] (depthwise: [channels, 1, k, k]).
struct ConvLayer {
  LayerKind kind = LayerKind::kConv;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t k = 3;
  std::vector<double> weight;
  std::vector<double> bias;

  std::size_t fan_in() const noexcept { return (kind == LayerKind::kDepthwise ? 1 : in) * k * k; }
  std::size_t weight_count() const noexcept {
    return kind == LayerKind::kDepthwise ? out * k * k : out * in * k * k;
  }
  std::size_t parameter_count() const noexcept { return weight.size() + bias.size(); }
  /// Same shape, all zeros.
  ConvLayer zeros_like() const;
};

/// Training hyperparameters.
struct AdaptationConfig {
  double lr = 1.8e-3;
  std::size_t epochs = 80;
  double lambda_pr = 1.0;
  double lambda_spe = 0.5;
  double lambda_phy = 10.0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> warm_start;

  void validate() const;
};

inline constexpr std::size_t kDefaultEpochs = 80;
inline constexpr std::size_t kCrossSensorEpochs = 350;

/// Weights of the adaptive network plus Adam moments.
///
/// Topology, where each block B is one 3x3 conv (default variant) or a
/// depthwise 3x3 + pointwise 1x1 pair (lightweight variant):
///   a0 = relu(B0(delta)); a1 = relu(B1(a0)); a2 = relu(B2(a1) + a0);
///   x_star = B3(a2) + yhat
struct NetworkParams {
  Variant variant = Variant::kDefault;
  std::size_t bands = 0;
  std::size_t width = 0;
  std::vector<ConvLayer> layers;
  std::vector<ConvLayer> adam_m;
  std::vector<ConvLayer> adam_v;
  std::uint64_t step_count = 0;
  /// Bumped whenever the weights change; activation caches remember it.
  std::uint64_t generation = 0;

  std::size_t layers_per_block() const noexcept { return variant == Variant::kDefault ? 1 : 2; }
  std::size_t parameter_count() const noexcept;
  void reset_optimizer();
};

/// Parameter gradients, one entry per layer of the matching NetworkParams.
struct Gradients {
  std::vector<ConvLayer> layers;
};

/// Hidden width used when none is requested: 32 for the default variant,
/// a band-dependent width for the lightweight one.
std::size_t default_hidden_width(Variant v, std::size_t bands);

/// Builds the layer stack with zero weights.
NetworkParams make_network(Variant v, std::size_t bands, std::size_t width = 0);

/// PyTorch-style fan-in uniform init: every weight and bias drawn from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); deterministic in `seed`.
NetworkParams init_params(Variant v, std::size_t bands, std::uint64_t seed, std::size_t width = 0);

/// delta = replicate(pan, c) - yhat.
ImageTensor build_input(const ImageTensor& pan, const ImageTensor& yhat);

using Feature = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Activations retained by forward() for backward().
struct ForwardCache {
  std::uint64_t generation = 0;
  const NetworkParams* owner = nullptr;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Feature> layer_inputs;  // input of every layer, in order
  Feature a0, a1, a2;                 // post-ReLU activations
};

struct ForwardResult {
  ImageTensor x_star;
  ForwardCache cache;
};

ForwardResult forward(const NetworkParams& params, const ImageTensor& delta, const ImageTensor& yhat);
/// Inference only; no cache is kept.
ImageTensor infer(const NetworkParams& params, const ImageTensor& delta, const ImageTensor& yhat);

/// Gradients of a scalar loss with respect to every weight and bias given
/// dL/dx_star. Throws ContractError when the cache does not belong to the
/// current weights.
Gradients backward(const NetworkParams& params, const ForwardCache& cache, const ImageTensor& grad_x_star);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// One bias-corrected Adam update with lr from `cfg`.
void adam_step(NetworkParams& params, const Gradients& grads, const AdaptationConfig& cfg);

// FMGP parameter file (little-endian):
//   "FMGP" | u8 version=1 | u8 variant | u32 bands | u32 width | u8 dtype (1 f32, 2 f64)
//   | u32 layer count | per layer: u8 kind, u32 in, u32 out, u32 k
//   | payload: per layer, weights then biases.
// Adam moments are not persisted; a loaded network starts a fresh optimizer.
void save_params(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_params(const std::filesystem::path& path);
/// Loads and checks that the file matches `variant` and `bands`.
NetworkParams load_params(const std::filesystem::path& path, Variant variant, std::size_t bands);

}  // namespace fmgpan
