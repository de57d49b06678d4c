#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>

#include "fmgpan/mtf.hpp"
#include "fmgpan/tensor.hpp"

namespace fmgpan {

/// Injection matrix H (c rows, c+1 columns). Columns 0..c-1 hold -g_i*w_{j,i}
/// and are never positive; the last column holds g_i and is never negative.
struct DetailCoefficients {
  Matrix values;
  double residual_norm = 0.0;
  bool degenerate = false;
  std::size_t patch_row = 0;  // PAN-scale origin of the estimation crop
  std::size_t patch_col = 0;
  std::size_t patch_size = 0;

  std::size_t bands() const noexcept { return values.rows; }
  /// True when every entry is finite and the sign pattern holds exactly.
  bool has_valid_signs() const noexcept;

  static DetailCoefficients zeros(std::size_t bands);
};

/// Reduced-scale regression: find H with H * m_rd ~= target.
struct ReducedSystem {
  Eigen::MatrixXd m_rd;    // (c+1) x n, reduced-scale M unfolding
  Eigen::MatrixXd target;  // c x n, Y - blur(Y) on the LR crop
  std::size_t patch_row = 0;
  std::size_t patch_col = 0;
  std::size_t patch_size = 0;
};

inline constexpr std::size_t kDefaultPfPatch = 64;

/// M = [yhat bands..., pan].
ImageTensor build_m(const ImageTensor& yhat, const ImageTensor& pan);

/// Builds the reduced-scale system from the central `patch` x `patch` PAN
/// crop and the matching LR crop of `y`.
ReducedSystem build_reduced_system(const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
                                   std::size_t patch = kDefaultPfPatch);

/// Row-wise sign-constrained least squares, solved as NNLS after negating
/// the MS rows of m_rd.
DetailCoefficients estimate_coefficients(const ReducedSystem& sys);

/// Number of estimate_coefficients calls made by this process.
std::size_t estimate_coefficients_call_count() noexcept;

/// Detail = build_m(yhat, pan) x_3 H.
ImageTensor synthesize_detail(const ImageTensor& yhat, const ImageTensor& pan, const DetailCoefficients& h);

struct PfProducts {
  DetailCoefficients coefficients;
  ImageTensor detail;
};

/// Full PF precompute: reduced system, coefficient fit and Detail synthesis.
PfProducts run_pf_module(const ImageTensor& y, const ImageTensor& yhat, const ImageTensor& pan,
                         const SensorSpec& spec, std::size_t patch = kDefaultPfPatch);

void write_coefficients_json(const std::filesystem::path& path, const DetailCoefficients& h);

}  // namespace fmgpan
