#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fmgpan/mtf.hpp"
#include "fmgpan/tensor.hpp"

namespace fmgpan {

/// Procedural test scene: a ground-truth HRMS, the PAN derived from it and
/// the LRMS produced by the sensor degradation.
struct SyntheticScene {
  ImageTensor hrms;
  ImageTensor pan;
  ImageTensor lrms;
  std::vector<double> pan_weights;  // nonnegative band weights of the PAN
};

struct SceneOptions {
  std::size_t size = 256;  // HRMS side length, multiple of the ratio
  std::size_t bands = 4;
  std::uint64_t seed = 7;
  /// Strength of the quadratic term added to the weighted band sum.
  double pan_nonlinearity = 0.05;
};

/// Mixed ramps, piecewise-constant objects with band-specific reflectance
/// and oriented texture; values stay inside (0, 1).
ImageTensor make_procedural_hrms(const SceneOptions& opts);

/// PAN = sum_k w_k * X_k + nonlinearity * (sum_k w_k * X_k)^2, rescaled to the
/// weighted-sum range.
ImageTensor make_pan(const ImageTensor& hrms, const std::vector<double>& weights, double nonlinearity);

SyntheticScene make_scene(const SceneOptions& opts, const SensorSpec& spec);

}  // namespace fmgpan
