#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "fmgpan/mtf.hpp"
#include "fmgpan/tensor.hpp"

namespace fmgpan {

inline constexpr std::size_t kDefaultBlockSize = 32;
/// Added to both denominator factors of Q and Q2n.
inline constexpr double kQStabilizer = 1e-16;

enum class ReportMode { kFullRes, kReducedRes };

struct QualityReport {
  ReportMode mode = ReportMode::kFullRes;
  std::map<std::string, double> scalars;
  /// Per-block HQNR (full-res only), one sample per block.
  std::optional<ImageTensor> block_map;
  std::size_t block_size = kDefaultBlockSize;
  std::map<std::string, std::string> config;

  double at(const std::string& key) const { return scalars.at(key); }
};

/// Universal image quality index of one pair of equally sized blocks.
/// Two constant blocks with equal means score 1.
double q_block(std::span<const double> a, std::span<const double> b);

/// Q averaged over non-overlapping block x block tiles of two single-band
/// images (partial tiles at the right/bottom edge are ignored).
double q_index(const ImageTensor& a, const ImageTensor& b, std::size_t block = kDefaultBlockSize);
/// Per-tile Q values, row-major over the tile grid.
ImageTensor q_map(const ImageTensor& a, const ImageTensor& b, std::size_t block = kDefaultBlockSize);

/// Cayley-Dickson product of two 2^k-dimensional hypercomplex numbers.
void cayley_dickson_multiply(std::span<const double> x, std::span<const double> y, std::span<double> out);

/// Hypercomplex Q index; bands are zero-padded to the next power of two.
double q2n(const ImageTensor& a, const ImageTensor& b, std::size_t block = kDefaultBlockSize);

/// 1 - Q2n(degrade(fused), y), clamped to [0, 1].
double d_lambda_khan(const ImageTensor& fused, const ImageTensor& y, const SensorSpec& spec,
                     std::size_t block = kDefaultBlockSize);

/// mean_b |Q(fused_b, P) - Q(y_b, degrade(P))|, clamped to [0, 1].
double d_s(const ImageTensor& fused, const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
           std::size_t block = kDefaultBlockSize);

/// D_lambda, D_s and HQNR = (1 - D_lambda)(1 - D_s), plus a block map whose
/// mean equals the scalar HQNR when no clamping occurred.
QualityReport hqnr(const ImageTensor& fused, const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
                   std::size_t block = kDefaultBlockSize);

double hqnr_from(double d_lambda, double d_s);

double sam_degrees(const ImageTensor& fused, const ImageTensor& truth, std::size_t* skipped = nullptr);
double ergas(const ImageTensor& fused, const ImageTensor& truth, std::size_t ratio);
double scc(const ImageTensor& fused, const ImageTensor& truth);

/// SAM, ERGAS, SCC and Q2n against a ground truth.
QualityReport reduced_metrics(const ImageTensor& fused, const ImageTensor& truth, std::size_t ratio = 4,
                              std::size_t block = kDefaultBlockSize);

void write_report_json(const std::filesystem::path& path, const QualityReport& report);

/// Grayscale PNG of the block map, each block expanded to block_size pixels,
/// values in [0, 1] mapped to [0, 255].
void write_heatmap_png(const std::filesystem::path& path, const QualityReport& report);

}  // namespace fmgpan
