#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fmgpan/mtf.hpp"
#include "fmgpan/tensor.hpp"

namespace testsupport {

using fmgpan::ImageTensor;

inline ImageTensor random_tensor(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed, double lo = 0.0,
                                 double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  ImageTensor t(h, w, c);
  for (double& v : t.data()) v = d(gen);
  return t;
}

// Zeros everything within `border` pixels of the edge.
inline ImageTensor zero_border(ImageTensor t, std::size_t border) {
  for (std::size_t b = 0; b < t.bands(); ++b)
    for (std::size_t r = 0; r < t.height(); ++r)
      for (std::size_t c = 0; c < t.width(); ++c)
        if (r < border || c < border || r + border >= t.height() || c + border >= t.width()) t.at(b, r, c) = 0.0;
  return t;
}

// Half-sample symmetric extension written out by unfolding the mirror.
inline std::size_t mirror(long i, long n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

// Direct true convolution with mirrored borders: out(p) = sum_u w(u) x(p - u + R).
inline ImageTensor brute_conv(const ImageTensor& x, const std::vector<double>& w, std::size_t taps) {
  const long R = static_cast<long>(taps / 2);
  const long H = static_cast<long>(x.height()), W = static_cast<long>(x.width());
  ImageTensor out(x.height(), x.width(), x.bands());
  for (std::size_t b = 0; b < x.bands(); ++b)
    for (long r = 0; r < H; ++r)
      for (long c = 0; c < W; ++c) {
        double s = 0.0;
        for (long u = 0; u < static_cast<long>(taps); ++u)
          for (long v = 0; v < static_cast<long>(taps); ++v)
            s += w[static_cast<std::size_t>(u) * taps + static_cast<std::size_t>(v)] *
                 x.at(b, mirror(r - (u - R), H), mirror(c - (v - R), W));
        out.at(b, static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = s;
      }
  return out;
}

// Gaussian taps from the Nyquist-gain relation, built independently of the library.
inline std::vector<double> gaussian_taps(double gnyq, std::size_t ratio, std::size_t taps) {
  const double pi = 3.14159265358979323846;
  const double sigma = static_cast<double>(ratio) / pi * std::sqrt(2.0 * std::log(1.0 / gnyq));
  std::vector<double> g(taps);
  double s = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(taps / 2);
    s += (g[i] = std::exp(-d * d / (2.0 * sigma * sigma)));
  }
  for (double& v : g) v /= s;
  return g;
}

inline std::vector<double> outer(const std::vector<double>& a) {
  std::vector<double> w(a.size() * a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) w[i * a.size() + j] = a[i] * a[j];
  return w;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("fmgpan-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline fmgpan::SensorSpec qb() { return fmgpan::resolve_sensor_spec("qb", fmgpan::default_preset_dir()); }
inline fmgpan::SensorSpec wv3() { return fmgpan::resolve_sensor_spec("wv3", fmgpan::default_preset_dir()); }

}  // namespace testsupport
