#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fmgpan {

/// Planar multi-band raster (band-major, then row, then column) of doubles.
/// Samples are kept on the unit scale; min_valid/max_valid record the
/// radiometric range of the source data in sensor digital numbers.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, std::size_t bands, double fill = 0.0);
  ImageTensor(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t band, std::size_t row, std::size_t col) noexcept {
    return data_[(band * height_ + row) * width_ + col];
  }
  double at(std::size_t band, std::size_t row, std::size_t col) const noexcept {
    return data_[(band * height_ + row) * width_ + col];
  }

  std::span<double> band(std::size_t b) noexcept { return {data_.data() + b * plane_size(), plane_size()}; }
  std::span<const double> band(std::size_t b) const noexcept {
    return {data_.data() + b * plane_size(), plane_size()};
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  double min_valid = 0.0;
  double max_valid = 1.0;

  bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && bands_ == other.bands_;
  }
  bool same_grid(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;

  /// Copy of a single band as a one-band tensor.
  ImageTensor extract_band(std::size_t b) const;
  /// Rectangular window [row0, row0+rows) x [col0, col0+cols) of every band.
  ImageTensor crop(std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols) const;
  /// One-band image replicated into `bands` bands.
  ImageTensor replicate(std::size_t bands) const;

  ImageTensor& operator+=(const ImageTensor& rhs);
  ImageTensor& operator-=(const ImageTensor& rhs);
  ImageTensor& operator*=(double s);

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

ImageTensor operator+(ImageTensor lhs, const ImageTensor& rhs);
ImageTensor operator-(ImageTensor lhs, const ImageTensor& rhs);
ImageTensor operator*(ImageTensor lhs, double s);

/// Sum of elementwise products.
double dot(const ImageTensor& a, const ImageTensor& b);
double max_abs_diff(const ImageTensor& a, const ImageTensor& b);
double mean(std::span<const double> v);

/// Square convolution kernel with symmetric-reflection boundary. When the
/// kernel is an outer product v v^T, `separable` holds v and the convolution
/// runs as two 1-D passes.
struct KernelSpec {
  std::size_t taps = 1;
  std::vector<double> weights{1.0};  // taps x taps, row-major
  std::optional<std::vector<double>> separable;

  double weight(std::size_t row, std::size_t col) const { return weights[row * taps + col]; }
  double sum() const;

  static KernelSpec identity();
  static KernelSpec from_weights(std::size_t taps, std::vector<double> weights);
  static KernelSpec from_separable(std::vector<double> taps_1d);
};

/// Maps any integer index onto [0, n) by half-sample symmetric reflection
/// (d c b a | a b c d | d c b a).
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept;

/// Per-band 2-D convolution, output on the input grid.
ImageTensor conv2d_same(const ImageTensor& img, const KernelSpec& k);
/// Exact adjoint of conv2d_same (reflection boundary included).
ImageTensor adjoint_conv2d(const ImageTensor& img, const KernelSpec& k);

/// Separable 23-tap polynomial interpolation; each pass doubles the grid and
/// keeps the input samples at even sites. Supported ratios: 2 and 4.
ImageTensor upsample_poly(const ImageTensor& img, std::size_t ratio);

/// The 23 interpolation taps (centre tap 1, even offsets 0).
std::span<const double> interp23_taps();

/// Keeps samples at (offset + i*ratio, offset + j*ratio).
ImageTensor decimate(const ImageTensor& img, std::size_t ratio, std::size_t offset = 0);
/// Adjoint of decimate: zero-insertion onto a (h*ratio, w*ratio) grid.
ImageTensor zero_insert(const ImageTensor& img, std::size_t ratio, std::size_t offset = 0);

/// Dense real matrix, row-major, used for the c x (c+1) coefficient tables.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// out[i, p] = sum_j h(i, j) * m[j, p].
ImageTensor mode3_multiply(const ImageTensor& m, const Matrix& h);

/// Band-wise concatenation of tensors sharing a grid.
ImageTensor concat_bands(const ImageTensor& a, const ImageTensor& b);

}  // namespace fmgpan
