#include "fmgpan/mtf.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "fmgpan/error.hpp"

#ifndef FMGPAN_PRESET_DIR
#define FMGPAN_PRESET_DIR "presets"
#endif
#ifndef FMGPAN_INSTALLED_PRESET_DIR
#define FMGPAN_INSTALLED_PRESET_DIR FMGPAN_PRESET_DIR
#endif

namespace fmgpan {

void SensorSpec::validate() const {
  if (bands == 0) throw ConfigError("sensor '" + name + "' declares zero bands");
  if (ratio != 2 && ratio != 4) throw ConfigError("sensor ratio must be 2 or 4, got " + std::to_string(ratio));
  if (gnyq_ms.size() != bands) {
    throw ConfigError("sensor '" + name + "' lists " + std::to_string(gnyq_ms.size()) + " MS gains for " +
                      std::to_string(bands) + " bands");
  }
  for (double g : gnyq_ms)
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("MS Nyquist gain " + std::to_string(g) + " outside (0,1)");
  if (!(gnyq_pan > 0.0 && gnyq_pan < 1.0)) throw ConfigError("PAN Nyquist gain outside (0,1)");
  if (kernel_taps % 2 == 0) throw ConfigError("kernel_taps must be odd");
}

SensorSpec SensorSpec::uniform(std::size_t bands, double gnyq_ms, double gnyq_pan, std::size_t ratio) {
  SensorSpec s;
  s.name = "uniform";
  s.bands = bands;
  s.ratio = ratio;
  s.gnyq_ms.assign(bands, gnyq_ms);
  s.gnyq_pan = gnyq_pan;
  s.validate();
  return s;
}

SensorSpec load_sensor_spec(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open sensor preset " + path.string());
  SensorSpec s;
  try {
    const auto j = nlohmann::json::parse(is);
    s.name = j.at("name").get<std::string>();
    s.bands = j.at("bands").get<std::size_t>();
    s.ratio = j.at("ratio").get<std::size_t>();
    s.gnyq_ms = j.at("gnyq_ms").get<std::vector<double>>();
    s.gnyq_pan = j.at("gnyq_pan").get<double>();
    s.kernel_taps = j.value("kernel_taps", std::size_t{41});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad sensor preset " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

std::filesystem::path default_preset_dir() {
  if (const char* env = std::getenv("FMGPAN_PRESET_DIR"); env != nullptr && *env != '\0') return env;
  const std::filesystem::path build_tree = FMGPAN_PRESET_DIR;
  if (std::filesystem::is_directory(build_tree)) return build_tree;
  return FMGPAN_INSTALLED_PRESET_DIR;
}

SensorSpec resolve_sensor_spec(const std::string& name_or_path, const std::filesystem::path& preset_dir) {
  if (std::filesystem::is_regular_file(name_or_path)) return load_sensor_spec(name_or_path);
  std::string lower = name_or_path;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto candidate = preset_dir / (lower + ".json");
  if (std::filesystem::is_regular_file(candidate)) return load_sensor_spec(candidate);
  throw ConfigError("unknown sensor '" + name_or_path + "' (looked in " + preset_dir.string() + ")");
}

double mtf_sigma(double gnyq, std::size_t ratio) {
  if (!(gnyq > 0.0 && gnyq < 1.0)) throw ConfigError("Nyquist gain " + std::to_string(gnyq) + " outside (0,1)");
  return static_cast<double>(ratio) / std::numbers::pi * std::sqrt(2.0 * std::log(1.0 / gnyq));
}

KernelSpec mtf_kernel(double gnyq, std::size_t ratio, std::size_t taps) {
  const double sigma = mtf_sigma(gnyq, ratio);
  if (taps % 2 == 0) throw ConfigError("kernel taps must be odd");
  const auto radius = static_cast<std::ptrdiff_t>(taps / 2);
  std::vector<double> v(taps);
  double s = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double x = static_cast<double>(i);
    v[i + radius] = std::exp(-0.5 * x * x / (sigma * sigma));
    s += v[i + radius];
  }
  for (double& w : v) w /= s;
  return KernelSpec::from_separable(std::move(v));
}

std::size_t fitted_taps(std::size_t taps, std::size_t height, std::size_t width) {
  std::size_t limit = std::min(height, width);
  if (limit % 2 == 0) --limit;
  return std::max<std::size_t>(1, std::min(taps, limit));
}

std::vector<KernelSpec> mtf_kernels_for(const ImageTensor& img, const SensorSpec& spec, BlurTarget target) {
  const std::size_t taps = fitted_taps(spec.kernel_taps, img.height(), img.width());
  std::vector<KernelSpec> kernels;
  kernels.reserve(img.bands());
  if (target == BlurTarget::kMultispectral) {
    if (img.bands() != spec.bands) {
      throw DimensionError("image has " + std::to_string(img.bands()) + " bands, sensor '" + spec.name + "' has " +
                           std::to_string(spec.bands));
    }
    for (std::size_t b = 0; b < img.bands(); ++b) kernels.push_back(mtf_kernel(spec.gnyq_ms[b], spec.ratio, taps));
  } else {
    const KernelSpec k = mtf_kernel(spec.gnyq_pan, spec.ratio, taps);
    kernels.assign(img.bands(), k);
  }
  return kernels;
}

namespace {

template <typename Op>
ImageTensor per_band(const ImageTensor& img, const std::vector<KernelSpec>& kernels, Op op) {
  ImageTensor out(img.height(), img.width(), img.bands());
  out.min_valid = img.min_valid;
  out.max_valid = img.max_valid;
  for (std::size_t b = 0; b < img.bands(); ++b) {
    const ImageTensor blurred = op(img.extract_band(b), kernels[b]);
    std::copy(blurred.data().begin(), blurred.data().end(), out.band(b).begin());
  }
  return out;
}

}  // namespace

ImageTensor mtf_blur(const ImageTensor& img, const SensorSpec& spec, BlurTarget target) {
  return per_band(img, mtf_kernels_for(img, spec, target),
                  [](const ImageTensor& x, const KernelSpec& k) { return conv2d_same(x, k); });
}

ImageTensor adjoint_mtf_blur(const ImageTensor& img, const SensorSpec& spec, BlurTarget target) {
  return per_band(img, mtf_kernels_for(img, spec, target),
                  [](const ImageTensor& x, const KernelSpec& k) { return adjoint_conv2d(x, k); });
}

ImageTensor degrade(const ImageTensor& img, const SensorSpec& spec, BlurTarget target, std::size_t offset) {
  if (img.height() % spec.ratio != 0 || img.width() % spec.ratio != 0) {
    throw DimensionError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                         " is not divisible by ratio " + std::to_string(spec.ratio));
  }
  return decimate(mtf_blur(img, spec, target), spec.ratio, offset);
}

ImageTensor adjoint_degrade(const ImageTensor& lr, const SensorSpec& spec, BlurTarget target, std::size_t offset) {
  return adjoint_mtf_blur(zero_insert(lr, spec.ratio, offset), spec, target);
}

}  // namespace fmgpan
