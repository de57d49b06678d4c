#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "fmgpan/tensor.hpp"

namespace fmgpan {

/// Sensor description driving every MTF-matched operator.
struct SensorSpec {
  std::string name = "custom";
  std::size_t bands = 0;
  std::size_t ratio = 4;
  std::vector<double> gnyq_ms;
  double gnyq_pan = 0.15;
  std::size_t kernel_taps = 41;

  /// Throws ConfigError when any invariant is broken.
  void validate() const;

  /// Builds a spec with the same gain for every MS band.
  static SensorSpec uniform(std::size_t bands, double gnyq_ms, double gnyq_pan = 0.15, std::size_t ratio = 4);
};

SensorSpec load_sensor_spec(const std::filesystem::path& path);
/// Resolves a preset by name ("WV3", "wv3") inside `preset_dir`, or treats
/// `name_or_path` as a JSON file path when it exists.
SensorSpec resolve_sensor_spec(const std::string& name_or_path, const std::filesystem::path& preset_dir);
/// Directory of the shipped presets: $FMGPAN_PRESET_DIR if set, else the
/// location baked in at build time.
std::filesystem::path default_preset_dir();

enum class BlurTarget { kMultispectral, kPan };

/// Gaussian standard deviation (in samples) whose continuous frequency
/// response equals `gnyq` at f = 1 / (2 * ratio).
double mtf_sigma(double gnyq, std::size_t ratio);

/// Unit-sum separable truncated Gaussian matched to the Nyquist gain.
KernelSpec mtf_kernel(double gnyq, std::size_t ratio, std::size_t taps);

/// Largest odd tap count not exceeding `taps` that fits an h x w grid.
std::size_t fitted_taps(std::size_t taps, std::size_t height, std::size_t width);

/// Kernels used to blur each band of `img` for the given target: one per MS
/// band (spec.gnyq_ms), or the PAN kernel for every band. Tap counts are
/// clipped to the image grid.
std::vector<KernelSpec> mtf_kernels_for(const ImageTensor& img, const SensorSpec& spec, BlurTarget target);

ImageTensor mtf_blur(const ImageTensor& img, const SensorSpec& spec, BlurTarget target);
/// Exact adjoint of mtf_blur.
ImageTensor adjoint_mtf_blur(const ImageTensor& img, const SensorSpec& spec, BlurTarget target);

/// decimate(mtf_blur(img), ratio, offset).
ImageTensor degrade(const ImageTensor& img, const SensorSpec& spec, BlurTarget target, std::size_t offset = 0);
/// Adjoint of degrade: zero insertion followed by the adjoint blur.
ImageTensor adjoint_degrade(const ImageTensor& lr, const SensorSpec& spec, BlurTarget target, std::size_t offset = 0);

}  // namespace fmgpan
