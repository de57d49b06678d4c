#include "fmgpan/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "fmgpan/error.hpp"

namespace fmgpan {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t bands, double fill)
    : height_(height), width_(width), bands_(bands), data_(height * width * bands, fill) {}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t bands, std::vector<double> data)
    : height_(height), width_(width), bands_(bands), data_(std::move(data)) {
  if (data_.size() != height * width * bands) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(bands));
  }
}

bool ImageTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

ImageTensor ImageTensor::extract_band(std::size_t b) const {
  if (b >= bands_) throw DimensionError("band index out of range");
  auto src = band(b);
  ImageTensor out(height_, width_, 1, std::vector<double>(src.begin(), src.end()));
  out.min_valid = min_valid;
  out.max_valid = max_valid;
  return out;
}

ImageTensor ImageTensor::crop(std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols) const {
  if (row0 + rows > height_ || col0 + cols > width_) {
    throw DimensionError("crop window exceeds image bounds");
  }
  ImageTensor out(rows, cols, bands_);
  for (std::size_t b = 0; b < bands_; ++b)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out.at(b, r, c) = at(b, row0 + r, col0 + c);
  out.min_valid = min_valid;
  out.max_valid = max_valid;
  return out;
}

ImageTensor ImageTensor::replicate(std::size_t bands) const {
  if (bands_ != 1) throw DimensionError("replicate expects a single-band image");
  ImageTensor out(height_, width_, bands);
  for (std::size_t b = 0; b < bands; ++b) std::copy(data_.begin(), data_.end(), out.band(b).begin());
  out.min_valid = min_valid;
  out.max_valid = max_valid;
  return out;
}

ImageTensor& ImageTensor::operator+=(const ImageTensor& rhs) {
  if (!same_shape(rhs)) throw DimensionError("operand shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

ImageTensor& ImageTensor::operator-=(const ImageTensor& rhs) {
  if (!same_shape(rhs)) throw DimensionError("operand shapes differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

ImageTensor& ImageTensor::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

ImageTensor operator+(ImageTensor lhs, const ImageTensor& rhs) { return lhs += rhs; }
ImageTensor operator-(ImageTensor lhs, const ImageTensor& rhs) { return lhs -= rhs; }
ImageTensor operator*(ImageTensor lhs, double s) { return lhs *= s; }

double dot(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw DimensionError("dot operands differ in shape");
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw DimensionError("operands differ in shape");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Kernels

double KernelSpec::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

KernelSpec KernelSpec::identity() { return KernelSpec{}; }

KernelSpec KernelSpec::from_weights(std::size_t taps, std::vector<double> weights) {
  if (taps % 2 == 0) throw ConfigError("kernel taps must be odd, got " + std::to_string(taps));
  if (weights.size() != taps * taps) throw ConfigError("kernel weight count does not match taps");
  KernelSpec k;
  k.taps = taps;
  k.weights = std::move(weights);
  return k;
}

KernelSpec KernelSpec::from_separable(std::vector<double> taps_1d) {
  const std::size_t n = taps_1d.size();
  if (n % 2 == 0) throw ConfigError("kernel taps must be odd, got " + std::to_string(n));
  KernelSpec k;
  k.taps = n;
  k.weights.resize(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) k.weights[r * n + c] = taps_1d[r] * taps_1d[c];
  k.separable = std::move(taps_1d);
  return k;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

namespace {

void check_kernel_fits(const ImageTensor& img, const KernelSpec& k) {
  if (k.taps % 2 == 0) throw ConfigError("kernel taps must be odd");
  if (k.taps > std::min(img.height(), img.width())) {
    throw DimensionError("kernel of " + std::to_string(k.taps) + " taps exceeds image " +
                         std::to_string(img.height()) + "x" + std::to_string(img.width()));
  }
}

// 1-D convolution along rows (axis 1) or columns (axis 0) of one plane.
// Forward: out[i] = sum_u v[u] * in[reflect(i - (u - R))].
void conv1d_plane(std::span<const double> in, std::span<double> out, std::size_t h, std::size_t w,
                  std::span<const double> v, bool along_rows) {
  const auto radius = static_cast<std::ptrdiff_t>(v.size() / 2);
  if (along_rows) {
    std::vector<double> line(w + 2 * radius);
    for (std::size_t r = 0; r < h; ++r) {
      const double* src = in.data() + r * w;
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(line.size()); ++i)
        line[i] = src[reflect_index(i - radius, w)];
      double* dst = out.data() + r * w;
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        // padded index of in[x - (u - R)] is x + 2R - u
        const double* base = line.data() + x + 2 * radius;
        for (std::size_t u = 0; u < v.size(); ++u) acc += v[u] * base[-static_cast<std::ptrdiff_t>(u)];
        dst[x] = acc;
      }
    }
  } else {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t y = 0; y < h; ++y) {
      double* dst = out.data() + y * w;
      for (std::size_t u = 0; u < v.size(); ++u) {
        const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - (static_cast<std::ptrdiff_t>(u) - radius), h);
        const double* src = in.data() + sy * w;
        const double wu = v[u];
        for (std::size_t x = 0; x < w; ++x) dst[x] += wu * src[x];
      }
    }
  }
}

// Adjoint of conv1d_plane: scatter in[i] * v[u] into out[reflect(i - (u - R))].
void conv1d_plane_adjoint(std::span<const double> in, std::span<double> out, std::size_t h, std::size_t w,
                          std::span<const double> v, bool along_rows) {
  const auto radius = static_cast<std::ptrdiff_t>(v.size() / 2);
  std::fill(out.begin(), out.end(), 0.0);
  if (along_rows) {
    std::vector<double> line(w + 2 * radius);
    for (std::size_t r = 0; r < h; ++r) {
      std::fill(line.begin(), line.end(), 0.0);
      const double* src = in.data() + r * w;
      for (std::size_t x = 0; x < w; ++x) {
        double* base = line.data() + x + 2 * radius;
        const double s = src[x];
        for (std::size_t u = 0; u < v.size(); ++u) base[-static_cast<std::ptrdiff_t>(u)] += v[u] * s;
      }
      double* dst = out.data() + r * w;
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(line.size()); ++i)
        dst[reflect_index(i - radius, w)] += line[i];
    }
  } else {
    for (std::size_t y = 0; y < h; ++y) {
      const double* src = in.data() + y * w;
      for (std::size_t u = 0; u < v.size(); ++u) {
        const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - (static_cast<std::ptrdiff_t>(u) - radius), h);
        double* dst = out.data() + sy * w;
        const double wu = v[u];
        for (std::size_t x = 0; x < w; ++x) dst[x] += wu * src[x];
      }
    }
  }
}

}  // namespace

ImageTensor conv2d_same(const ImageTensor& img, const KernelSpec& k) {
  check_kernel_fits(img, k);
  const std::size_t h = img.height(), w = img.width();
  ImageTensor out(h, w, img.bands());
  out.min_valid = img.min_valid;
  out.max_valid = img.max_valid;
  if (k.separable) {
    std::vector<double> tmp(h * w);
    for (std::size_t b = 0; b < img.bands(); ++b) {
      conv1d_plane(img.band(b), tmp, h, w, *k.separable, true);
      conv1d_plane(tmp, out.band(b), h, w, *k.separable, false);
    }
    return out;
  }
  const auto radius = static_cast<std::ptrdiff_t>(k.taps / 2);
  for (std::size_t b = 0; b < img.bands(); ++b) {
    auto src = img.band(b);
    auto dst = out.band(b);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double acc = 0.0;
        for (std::size_t u = 0; u < k.taps; ++u) {
          const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - (static_cast<std::ptrdiff_t>(u) - radius), h);
          for (std::size_t v = 0; v < k.taps; ++v) {
            const std::size_t sx = reflect_index(static_cast<std::ptrdiff_t>(x) - (static_cast<std::ptrdiff_t>(v) - radius), w);
            acc += k.weight(u, v) * src[sy * w + sx];
          }
        }
        dst[y * w + x] = acc;
      }
    }
  }
  return out;
}

ImageTensor adjoint_conv2d(const ImageTensor& img, const KernelSpec& k) {
  check_kernel_fits(img, k);
  const std::size_t h = img.height(), w = img.width();
  ImageTensor out(h, w, img.bands());
  out.min_valid = img.min_valid;
  out.max_valid = img.max_valid;
  if (k.separable) {
    std::vector<double> tmp(h * w);
    for (std::size_t b = 0; b < img.bands(); ++b) {
      conv1d_plane_adjoint(img.band(b), tmp, h, w, *k.separable, false);
      conv1d_plane_adjoint(tmp, out.band(b), h, w, *k.separable, true);
    }
    return out;
  }
  const auto radius = static_cast<std::ptrdiff_t>(k.taps / 2);
  for (std::size_t b = 0; b < img.bands(); ++b) {
    auto src = img.band(b);
    auto dst = out.band(b);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double s = src[y * w + x];
        if (s == 0.0) continue;
        for (std::size_t u = 0; u < k.taps; ++u) {
          const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - (static_cast<std::ptrdiff_t>(u) - radius), h);
          for (std::size_t v = 0; v < k.taps; ++v) {
            const std::size_t sx = reflect_index(static_cast<std::ptrdiff_t>(x) - (static_cast<std::ptrdiff_t>(v) - radius), w);
            dst[sy * w + sx] += k.weight(u, v) * s;
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial interpolation

namespace {

// Half-kernel of the 23-tap interpolator at odd offsets 1, 3, ..., 11,
// rescaled so the odd phase sums exactly to one.
const std::array<double, 6>& odd_phase_taps() {
  static const std::array<double, 6> taps = [] {
    std::array<double, 6> t{0.305334091185, -0.072698593239, 0.021809577942,
                            -0.005192756653, 0.000807762146, -0.000060081482};
    double s = 0.0;
    for (double v : t) s += 2.0 * v;
    for (double& v : t) v /= s;
    return t;
  }();
  return taps;
}

// Doubles one axis. Input samples land on even sites.
void interp_double_1d(const double* in, std::size_t n, std::size_t in_stride, double* out, std::size_t out_stride) {
  const auto& t = odd_phase_taps();
  for (std::size_t i = 0; i < n; ++i) {
    out[(2 * i) * out_stride] = in[i * in_stride];
    double acc = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const auto lo = reflect_index(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(k), n);
      const auto hi = reflect_index(static_cast<std::ptrdiff_t>(i + 1 + k), n);
      acc += t[k] * (in[lo * in_stride] + in[hi * in_stride]);
    }
    out[(2 * i + 1) * out_stride] = acc;
  }
}

ImageTensor upsample_by_two(const ImageTensor& img) {
  const std::size_t h = img.height(), w = img.width();
  ImageTensor rows_done(h, 2 * w, img.bands());
  for (std::size_t b = 0; b < img.bands(); ++b)
    for (std::size_t r = 0; r < h; ++r)
      interp_double_1d(&img.band(b)[r * w], w, 1, &rows_done.band(b)[r * 2 * w], 1);
  ImageTensor out(2 * h, 2 * w, img.bands());
  for (std::size_t b = 0; b < img.bands(); ++b)
    for (std::size_t c = 0; c < 2 * w; ++c)
      interp_double_1d(&rows_done.band(b)[c], h, 2 * w, &out.band(b)[c], 2 * w);
  out.min_valid = img.min_valid;
  out.max_valid = img.max_valid;
  return out;
}

}  // namespace

std::span<const double> interp23_taps() {
  static const std::array<double, 23> full = [] {
    std::array<double, 23> k{};
    const auto& t = odd_phase_taps();
    k[11] = 1.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      k[11 + 2 * j + 1] = t[j];
      k[11 - 2 * j - 1] = t[j];
    }
    return k;
  }();
  return full;
}

ImageTensor upsample_poly(const ImageTensor& img, std::size_t ratio) {
  if (ratio != 2 && ratio != 4) {
    throw ConfigError("unsupported upsampling ratio " + std::to_string(ratio) + " (expected 2 or 4)");
  }
  ImageTensor out = upsample_by_two(img);
  if (ratio == 4) out = upsample_by_two(out);
  return out;
}

ImageTensor decimate(const ImageTensor& img, std::size_t ratio, std::size_t offset) {
  if (ratio == 0) throw ConfigError("ratio must be positive");
  if (img.height() % ratio != 0 || img.width() % ratio != 0) {
    throw DimensionError("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                         " is not divisible by ratio " + std::to_string(ratio));
  }
  if (offset >= ratio) throw ConfigError("decimation offset must be below the ratio");
  const std::size_t h = img.height() / ratio, w = img.width() / ratio;
  ImageTensor out(h, w, img.bands());
  for (std::size_t b = 0; b < img.bands(); ++b)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) out.at(b, r, c) = img.at(b, offset + r * ratio, offset + c * ratio);
  out.min_valid = img.min_valid;
  out.max_valid = img.max_valid;
  return out;
}

ImageTensor zero_insert(const ImageTensor& img, std::size_t ratio, std::size_t offset) {
  if (ratio == 0 || offset >= ratio) throw ConfigError("invalid ratio/offset for zero insertion");
  ImageTensor out(img.height() * ratio, img.width() * ratio, img.bands());
  for (std::size_t b = 0; b < img.bands(); ++b)
    for (std::size_t r = 0; r < img.height(); ++r)
      for (std::size_t c = 0; c < img.width(); ++c) out.at(b, offset + r * ratio, offset + c * ratio) = img.at(b, r, c);
  out.min_valid = img.min_valid;
  out.max_valid = img.max_valid;
  return out;
}

ImageTensor mode3_multiply(const ImageTensor& m, const Matrix& h) {
  if (m.bands() != h.cols) {
    throw DimensionError("mode-3 product: tensor has " + std::to_string(m.bands()) + " bands, matrix has " +
                         std::to_string(h.cols) + " columns");
  }
  ImageTensor out(m.height(), m.width(), h.rows);
  const std::size_t n = m.plane_size();
  for (std::size_t i = 0; i < h.rows; ++i) {
    auto dst = out.band(i);
    for (std::size_t j = 0; j < h.cols; ++j) {
      const double coef = h(i, j);
      if (coef == 0.0) continue;
      auto src = m.band(j);
      for (std::size_t p = 0; p < n; ++p) dst[p] += coef * src[p];
    }
  }
  out.min_valid = m.min_valid;
  out.max_valid = m.max_valid;
  return out;
}

ImageTensor concat_bands(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_grid(b)) throw DimensionError("cannot concatenate tensors on different grids");
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  ImageTensor out(a.height(), a.width(), a.bands() + b.bands(), std::move(data));
  out.min_valid = a.min_valid;
  out.max_valid = a.max_valid;
  return out;
}

}  // namespace fmgpan
