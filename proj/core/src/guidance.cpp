#include "fmgpan/guidance.hpp"

#include <algorithm>

#include "fmgpan/error.hpp"
#include "fmgpan/tensor_io.hpp"

namespace fmgpan {

namespace {

// A flat PAN carries no spatial detail to inject.
bool is_constant(const ImageTensor& img) {
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  return *lo == *hi;
}

}  // namespace

GuidanceSource GuidanceSource::parse(const std::string& text) {
  GuidanceSource s;
  if (text == "mtf-glp") {
    s.kind = GuidanceKind::kMtfGlp;
  } else if (text == "bdsd") {
    s.kind = GuidanceKind::kBdsd;
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    s.kind = GuidanceKind::kExternalFile;
    s.path = text.substr(5);
  } else {
    throw ConfigError("unknown guidance '" + text + "' (expected file:<path>, mtf-glp or bdsd)");
  }
  return s;
}

std::string GuidanceSource::describe() const {
  switch (kind) {
    case GuidanceKind::kMtfGlp: return "mtf-glp";
    case GuidanceKind::kBdsd: return "bdsd";
    case GuidanceKind::kExternalFile: return "file:" + path.string();
  }
  return "unknown";
}

ReferenceLoad load_reference(const std::filesystem::path& path, std::size_t height, std::size_t width,
                             std::size_t bands) {
  if (!std::filesystem::exists(path)) throw IoError("pseudo-reference " + path.string() + " does not exist");
  ReferenceLoad out;
  out.tensor = read_tensor(path).tensor;
  const ImageTensor& t = out.tensor;
  if (t.height() != height || t.width() != width || t.bands() != bands) {
    throw FormatError("pseudo-reference is " + std::to_string(t.height()) + "x" + std::to_string(t.width()) + "x" +
                      std::to_string(t.bands()) + ", expected " + std::to_string(height) + "x" +
                      std::to_string(width) + "x" + std::to_string(bands));
  }
  for (double& v : out.tensor.data()) {
    if (v < 0.0 || v > 1.0) {
      v = std::clamp(v, 0.0, 1.0);
      ++out.clamped_samples;
    }
  }
  return out;
}

FusionResult fuse_mtf_glp(const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec) {
  if (pan.bands() != 1) throw DimensionError("PAN must have a single band");
  if (y.bands() != spec.bands) throw DimensionError("LRMS band count does not match the sensor");
  const ImageTensor yhat = upsample_poly(y, spec.ratio);
  if (!yhat.same_grid(pan)) throw DimensionError("PAN grid must be exactly ratio times the LRMS grid");
  if (is_constant(pan)) return {yhat, false};
  const ImageTensor pan_low = upsample_poly(degrade(pan, spec, BlurTarget::kPan), spec.ratio);

  const auto pl = pan_low.band(0);
  const double mu_p = mean(pl);
  double var_p = 0.0;
  for (double v : pl) var_p += (v - mu_p) * (v - mu_p);
  var_p /= static_cast<double>(pl.size());

  FusionResult res;
  res.fused = yhat;
  res.degenerate = !(var_p > 1e-16);
  const auto pb = pan.band(0);
  for (std::size_t b = 0; b < yhat.bands(); ++b) {
    double gain = 1.0;
    if (!res.degenerate) {
      const auto yb = yhat.band(b);
      const double mu_y = mean(yb);
      double cov = 0.0;
      for (std::size_t i = 0; i < yb.size(); ++i) cov += (yb[i] - mu_y) * (pl[i] - mu_p);
      gain = cov / static_cast<double>(yb.size()) / var_p;
    }
    auto out = res.fused.band(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gain * (pb[i] - pl[i]);
  }
  return res;
}

BdsdGains bdsd_gains(const DetailCoefficients& h) {
  const std::size_t c = h.bands();
  BdsdGains out;
  out.g.assign(c, 0.0);
  out.w = Matrix(c, c, 0.0);
  for (std::size_t i = 0; i < c; ++i) {
    const double g = h.values(i, c);
    if (g > 1e-8) {
      out.g[i] = g;
      for (std::size_t k = 0; k < c; ++k) out.w(k, i) = -h.values(i, k) / g;
    }
  }
  return out;
}

FusionResult fuse_bdsd(const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
                       const DetailCoefficients* coefficients, std::size_t patch) {
  const ImageTensor yhat = upsample_poly(y, spec.ratio);
  if (!yhat.same_grid(pan)) throw DimensionError("PAN grid must be exactly ratio times the LRMS grid");
  if (is_constant(pan)) return {yhat, false};
  DetailCoefficients estimated;
  if (coefficients == nullptr) {
    estimated = estimate_coefficients(build_reduced_system(y, pan, spec, patch));
    coefficients = &estimated;
  }
  const BdsdGains gw = bdsd_gains(*coefficients);
  const std::size_t c = yhat.bands();
  FusionResult res;
  res.fused = yhat;
  res.degenerate = coefficients->degenerate;
  const auto pb = pan.band(0);
  for (std::size_t i = 0; i < c; ++i) {
    if (gw.g[i] == 0.0) continue;
    auto out = res.fused.band(i);
    for (std::size_t p = 0; p < out.size(); ++p) {
      double lin = 0.0;
      for (std::size_t k = 0; k < c; ++k) lin += gw.w(k, i) * yhat.band(k)[p];
      out[p] += gw.g[i] * (pb[p] - lin);
    }
  }
  return res;
}

}  // namespace fmgpan
