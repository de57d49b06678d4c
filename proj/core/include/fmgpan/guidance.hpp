#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "fmgpan/mtf.hpp"
#include "fmgpan/pf_module.hpp"
#include "fmgpan/tensor.hpp"

namespace fmgpan {

enum class GuidanceKind { kExternalFile, kMtfGlp, kBdsd };

struct GuidanceSource {
  GuidanceKind kind = GuidanceKind::kMtfGlp;
  std::filesystem::path path;  // external-file only

  /// "file:<path>", "mtf-glp" or "bdsd".
  static GuidanceSource parse(const std::string& text);
  std::string describe() const;
};

struct ReferenceLoad {
  ImageTensor tensor;
  std::size_t clamped_samples = 0;  // samples pulled back into [0, 1]
};

/// Loads an externally produced pseudo-reference and checks it against the
/// expected H x W x c shape.
ReferenceLoad load_reference(const std::filesystem::path& path, std::size_t height, std::size_t width,
                             std::size_t bands);

struct FusionResult {
  ImageTensor fused;
  bool degenerate = false;
};

/// MTF-GLP with global regression gains:
///   yhat_b + g_b * (pan - pan_low),  g_b = cov(yhat_b, pan_low) / var(pan_low),
///   pan_low = upsample(degrade(pan, PAN MTF)).
/// Falls back to unit gains (and flags degeneracy) when pan_low is constant.
FusionResult fuse_mtf_glp(const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec);

/// BDSD injection X_i = yhat_i + g_i * (P - sum_k w_{k,i} yhat_k) with the
/// coefficients taken from the PF module. `coefficients` may carry an
/// already estimated H so the fit is not repeated.
FusionResult fuse_bdsd(const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
                       const DetailCoefficients* coefficients = nullptr, std::size_t patch = kDefaultPfPatch);

/// Recovers (g_i, w_{k,i}) from H: g_i = H[i, c]; w_{k,i} = -H[i, k] / g_i
/// when g_i > 1e-8, else all zero.
struct BdsdGains {
  std::vector<double> g;  // c
  Matrix w;               // w(k, i)
};
BdsdGains bdsd_gains(const DetailCoefficients& h);

}  // namespace fmgpan
