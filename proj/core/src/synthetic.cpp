#include "fmgpan/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fmgpan/error.hpp"

namespace fmgpan {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace

ImageTensor make_procedural_hrms(const SceneOptions& opts) {
  if (opts.bands == 0 || opts.size == 0) throw ConfigError("scene needs at least one band and pixel");
  const std::size_t n = opts.size, c = opts.bands;
  const double nd = static_cast<double>(n);
  Rng rng(opts.seed);
  ImageTensor x(n, n, c);

  // Smooth background: per-band offset plus a linear ramp.
  for (std::size_t b = 0; b < c; ++b) {
    const double base = rng.uniform(0.25, 0.45);
    const double gx = rng.uniform(-0.15, 0.15), gy = rng.uniform(-0.15, 0.15);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t col = 0; col < n; ++col)
        x.at(b, r, col) = base + gx * (static_cast<double>(col) / nd - 0.5) + gy * (static_cast<double>(r) / nd - 0.5);
  }

  // Objects: rectangles and disks with band-specific reflectance offsets.
  const std::size_t objects = 12 + n / 16;
  for (std::size_t o = 0; o < objects; ++o) {
    const bool disk = rng.uniform(0.0, 1.0) < 0.4;
    const double cy = rng.uniform(0.0, nd), cx = rng.uniform(0.0, nd);
    const double ry = rng.uniform(nd / 40.0, nd / 8.0), rx = disk ? ry : rng.uniform(nd / 40.0, nd / 8.0);
    std::vector<double> offset(c);
    const double common = rng.uniform(-0.15, 0.2);
    for (auto& v : offset) v = common + rng.uniform(-0.08, 0.08);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t col = 0; col < n; ++col) {
        const double dy = (static_cast<double>(r) - cy) / ry, dx = (static_cast<double>(col) - cx) / rx;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (std::size_t b = 0; b < c; ++b) x.at(b, r, col) += offset[b];
      }
    }
  }

  // Oriented texture shared across bands with band-dependent amplitude.
  const std::size_t waves = 4;
  for (std::size_t k = 0; k < waves; ++k) {
    const double freq = rng.uniform(0.05, 0.22);  // cycles per pixel, up to near PAN Nyquist/2
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = rng.uniform(0.01, 0.03);
    std::vector<double> band_amp(c);
    for (auto& v : band_amp) v = amp * rng.uniform(0.6, 1.4);
    const double fx = freq * std::cos(theta), fy = freq * std::sin(theta);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t col = 0; col < n; ++col) {
        const double s = std::sin(2.0 * std::numbers::pi * (fx * static_cast<double>(col) + fy * static_cast<double>(r)) + phase);
        for (std::size_t b = 0; b < c; ++b) x.at(b, r, col) += band_amp[b] * s;
      }
  }

  for (double& v : x.data()) v = std::clamp(v, 0.02, 0.98);
  x.min_valid = 0.0;
  x.max_valid = 2047.0;
  return x;
}

ImageTensor make_pan(const ImageTensor& hrms, const std::vector<double>& weights, double nonlinearity) {
  if (weights.size() != hrms.bands()) throw DimensionError("PAN weight count does not match the band count");
  ImageTensor pan(hrms.height(), hrms.width(), 1);
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("PAN weights must be nonnegative");
    wsum += w;
  }
  for (std::size_t b = 0; b < hrms.bands(); ++b) {
    const auto src = hrms.band(b);
    auto dst = pan.band(0);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += weights[b] * src[i];
  }
  for (double& v : pan.data()) v = (v + nonlinearity * v * v) / (1.0 + nonlinearity * wsum);
  pan.min_valid = hrms.min_valid;
  pan.max_valid = hrms.max_valid;
  return pan;
}

SyntheticScene make_scene(const SceneOptions& opts, const SensorSpec& spec) {
  if (opts.bands != spec.bands) throw ConfigError("scene band count does not match the sensor");
  if (opts.size % spec.ratio != 0) throw DimensionError("scene size must be a multiple of the ratio");
  SyntheticScene s;
  s.hrms = make_procedural_hrms(opts);
  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  s.pan_weights.resize(opts.bands);
  double total = 0.0;
  for (auto& w : s.pan_weights) total += (w = rng.uniform(0.5, 1.5));
  for (auto& w : s.pan_weights) w /= total;
  s.pan = make_pan(s.hrms, s.pan_weights, opts.pan_nonlinearity);
  s.lrms = degrade(s.hrms, spec, BlurTarget::kMultispectral);
  return s;
}

}  // namespace fmgpan
