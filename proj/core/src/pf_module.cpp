#include "fmgpan/pf_module.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "fmgpan/error.hpp"
#include "fmgpan/nnls.hpp"

namespace fmgpan {

namespace {
std::atomic<std::size_t> g_estimate_calls{0};
}

bool DetailCoefficients::has_valid_signs() const noexcept {
  const std::size_t c = values.rows;
  if (values.cols != c + 1) return false;
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j <= c; ++j) {
      const double v = values(i, j);
      if (!std::isfinite(v)) return false;
      if (j < c && v > 0.0) return false;
      if (j == c && v < 0.0) return false;
    }
  }
  return true;
}

DetailCoefficients DetailCoefficients::zeros(std::size_t bands) {
  DetailCoefficients h;
  h.values = Matrix(bands, bands + 1, 0.0);
  return h;
}

ImageTensor build_m(const ImageTensor& yhat, const ImageTensor& pan) {
  if (pan.bands() != 1) throw DimensionError("PAN must have a single band");
  if (!yhat.same_grid(pan)) throw DimensionError("upsampled MS and PAN grids differ");
  return concat_bands(yhat, pan);
}

ReducedSystem build_reduced_system(const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
                                   std::size_t patch) {
  const std::size_t r = spec.ratio;
  if (pan.bands() != 1) throw DimensionError("PAN must have a single band");
  if (y.bands() != spec.bands) throw DimensionError("LRMS band count does not match the sensor");
  if (pan.height() != y.height() * r || pan.width() != y.width() * r) {
    throw DimensionError("PAN grid must be exactly ratio times the LRMS grid");
  }
  if (patch == 0 || patch % r != 0) throw DimensionError("PF patch must be a positive multiple of the ratio");
  if (patch > std::min(pan.height(), pan.width())) {
    throw DimensionError("PF patch " + std::to_string(patch) + " exceeds the PAN image");
  }

  // Central crop, origin snapped to the LR grid.
  const std::size_t row0 = (pan.height() - patch) / 2 / r * r;
  const std::size_t col0 = (pan.width() - patch) / 2 / r * r;
  const std::size_t lr_patch = patch / r;

  // Reduced-scale stand-ins for the full-scale quantities: Y plays X, the
  // interpolated degraded Y plays Yhat and the degraded PAN plays P. Filtering
  // runs on the whole LR image when its size allows, so the crop has no
  // artificial border.
  const bool whole = y.height() % r == 0 && y.width() % r == 0;
  if (!whole && lr_patch % r != 0) {
    throw DimensionError("LR image is not divisible by the ratio; use a PF patch that is a multiple of ratio^2");
  }
  const ImageTensor y_src = whole ? y : y.crop(row0 / r, col0 / r, lr_patch, lr_patch);
  const ImageTensor pan_src = whole ? pan : pan.crop(row0, col0, patch, patch);
  const std::size_t lr_row = whole ? row0 / r : 0, lr_col = whole ? col0 / r : 0;

  const ImageTensor ms_rd =
      upsample_poly(degrade(y_src, spec, BlurTarget::kMultispectral), r).crop(lr_row, lr_col, lr_patch, lr_patch);
  const ImageTensor pan_rd = degrade(pan_src, spec, BlurTarget::kPan).crop(lr_row, lr_col, lr_patch, lr_patch);
  const ImageTensor y_crop = y_src.crop(lr_row, lr_col, lr_patch, lr_patch);
  const ImageTensor y_blur = mtf_blur(y_src, spec, BlurTarget::kMultispectral).crop(lr_row, lr_col, lr_patch, lr_patch);

  const std::size_t c = spec.bands;
  const std::size_t n = lr_patch * lr_patch;
  ReducedSystem sys;
  sys.m_rd.resize(static_cast<Eigen::Index>(c + 1), static_cast<Eigen::Index>(n));
  sys.target.resize(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n));
  for (std::size_t b = 0; b < c; ++b) {
    auto ms = ms_rd.band(b);
    auto yb = y_crop.band(b);
    auto blur = y_blur.band(b);
    for (std::size_t p = 0; p < n; ++p) {
      sys.m_rd(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p)) = ms[p];
      sys.target(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(p)) = yb[p] - blur[p];
    }
  }
  auto pr = pan_rd.band(0);
  for (std::size_t p = 0; p < n; ++p) sys.m_rd(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(p)) = pr[p];
  sys.patch_row = row0;
  sys.patch_col = col0;
  sys.patch_size = patch;
  return sys;
}

DetailCoefficients estimate_coefficients(const ReducedSystem& sys) {
  ++g_estimate_calls;
  const auto rows = sys.m_rd.rows();
  const auto c = sys.target.rows();
  if (rows != c + 1) throw DimensionError("m_rd must have one more row than the target");
  if (sys.m_rd.cols() != sys.target.cols()) throw DimensionError("m_rd and target column counts differ");
  if (sys.m_rd.cols() < rows) throw DimensionError("reduced system is underdetermined");

  // h_i * m_rd = target_i  <=>  A z = b with A = m_rd^T, MS columns negated,
  // z = (-h_i[0..c-1], h_i[c]) >= 0.
  Eigen::MatrixXd a = sys.m_rd.transpose();
  a.leftCols(c) *= -1.0;

  DetailCoefficients h;
  h.values = Matrix(static_cast<std::size_t>(c), static_cast<std::size_t>(c + 1));
  double residual_sq = 0.0;
  for (Eigen::Index i = 0; i < c; ++i) {
    const Eigen::VectorXd b = sys.target.row(i).transpose();
    const NnlsResult z = solve_nnls(a, b);
    h.degenerate = h.degenerate || z.degenerate;
    for (Eigen::Index j = 0; j < c; ++j) {
      h.values(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = z.x[j] > 0.0 ? -z.x[j] : 0.0;
    }
    h.values(static_cast<std::size_t>(i), static_cast<std::size_t>(c)) = z.x[c];
    residual_sq += z.residual_norm * z.residual_norm;
  }
  h.residual_norm = std::sqrt(residual_sq);
  h.patch_row = sys.patch_row;
  h.patch_col = sys.patch_col;
  h.patch_size = sys.patch_size;
  return h;
}

std::size_t estimate_coefficients_call_count() noexcept { return g_estimate_calls.load(); }

ImageTensor synthesize_detail(const ImageTensor& yhat, const ImageTensor& pan, const DetailCoefficients& h) {
  if (h.values.rows != yhat.bands()) throw DimensionError("coefficient rows do not match the MS band count");
  return mode3_multiply(build_m(yhat, pan), h.values);
}

PfProducts run_pf_module(const ImageTensor& y, const ImageTensor& yhat, const ImageTensor& pan,
                         const SensorSpec& spec, std::size_t patch) {
  PfProducts out;
  out.coefficients = estimate_coefficients(build_reduced_system(y, pan, spec, patch));
  out.detail = synthesize_detail(yhat, pan, out.coefficients);
  return out;
}

void write_coefficients_json(const std::filesystem::path& path, const DetailCoefficients& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < h.values.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < h.values.cols; ++j) row.push_back(h.values(i, j));
    rows.push_back(row);
  }
  nlohmann::json j{{"H", rows},
                   {"residual_norm", h.residual_norm},
                   {"degenerate", h.degenerate},
                   {"patch", {{"row", h.patch_row}, {"col", h.patch_col}, {"size", h.patch_size}}}};
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace fmgpan
