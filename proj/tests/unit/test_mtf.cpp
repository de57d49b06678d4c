#include <doctest.h>

#include <numeric>

#include "fmgpan/error.hpp"
#include "fmgpan/mtf.hpp"
#include "support.hpp"

using namespace fmgpan;
using namespace testsupport;

namespace {

double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Frequency response of a symmetric 1-D kernel.
double response(const std::vector<double>& g, double f) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    s += g[i] * std::cos(2.0 * 3.14159265358979323846 * f * (static_cast<double>(i) - static_cast<double>(g.size() / 2)));
  }
  return s;
}

}  // namespace

TEST_SUITE("mtf") {
  TEST_CASE("sigma from the Nyquist gain") {
    CHECK(mtf_sigma(0.3, 4) == doctest::Approx(1.97575).epsilon(1e-5));
    CHECK(mtf_sigma(0.999, 4) == doctest::Approx(0.0570).epsilon(1e-2));
    CHECK_THROWS(mtf_sigma(1.0, 4));
    CHECK_THROWS(mtf_sigma(0.0, 4));
  }

  TEST_CASE("kernel is normalized, matches the closed form and hits the gain at Nyquist") {
    for (double g : {0.15, 0.3, 0.36, 0.5}) {
      const auto k = mtf_kernel(g, 4, 41);
      CHECK(k.taps == 41);
      CHECK(k.sum() == doctest::Approx(1.0).epsilon(1e-9));
      REQUIRE(k.separable);
      const auto ref = gaussian_taps(g, 4, 41);
      for (std::size_t i = 0; i < 41; ++i) CHECK((*k.separable)[i] == doctest::Approx(ref[i]).epsilon(1e-12));
      // Nyquist of the LR grid is 1/(2r) cycles per HR sample.
      CHECK(response(ref, 1.0 / 8.0) == doctest::Approx(g).epsilon(2e-3));
    }
    const auto sharp = mtf_kernel(0.999, 4, 41);
    CHECK(sharp.weight(20, 20) > 0.999);
  }

  TEST_CASE("taps are clipped to the image") {
    CHECK(fitted_taps(41, 64, 64) == 41);
    CHECK(fitted_taps(41, 16, 20) == 15);
    CHECK(fitted_taps(41, 16, 16) == 15);
    CHECK(fitted_taps(41, 1, 9) == 1);
  }

  TEST_CASE("presets load and validate") {
    const auto w = wv3();
    CHECK(w.bands == 8);
    CHECK(w.ratio == 4);
    CHECK(w.gnyq_ms.size() == 8);
    CHECK(qb().bands == 4);
    CHECK(resolve_sensor_spec("WV2", default_preset_dir()).bands == 8);
    CHECK(resolve_sensor_spec("gf2", default_preset_dir()).bands == 4);
    CHECK_THROWS_AS(resolve_sensor_spec("nosuch", default_preset_dir()), Error);
    SensorSpec bad = SensorSpec::uniform(4, 0.3);
    bad.gnyq_ms[2] = 1.2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("mtf_blur: constants, delta response and per-band gains") {
    const auto spec = SensorSpec::uniform(2, 0.3);
    const auto c = mtf_blur(ImageTensor(48, 48, 2, 0.7), spec, BlurTarget::kMultispectral);
    for (double v : c.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

    ImageTensor d(48, 48, 1);
    d.at(0, 24, 24) = 1.0;
    const auto one = SensorSpec::uniform(1, 0.3);
    const auto k = gaussian_taps(0.3, 4, 41);
    const auto img = mtf_blur(d, one, BlurTarget::kMultispectral);
    for (std::size_t u = 0; u < 41; u += 5) CHECK(img.at(0, 4 + u, 24) == doctest::Approx(k[u] * k[20]).epsilon(1e-10));

    SensorSpec two = SensorSpec::uniform(2, 0.3);
    two.gnyq_ms = {0.2, 0.45};
    const auto x = random_tensor(64, 64, 1, 30).replicate(2);
    const auto y = mtf_blur(x, two, BlurTarget::kMultispectral);
    CHECK(variance(y.band(0)) < variance(y.band(1)));
  }

  TEST_CASE("degrade matches blur-then-sample built from scratch") {
    auto spec = qb();
    const auto x = random_tensor(48, 44, 4, 31);
    const auto y = degrade(x, spec, BlurTarget::kMultispectral);
    REQUIRE(y.height() == 12);
    REQUIRE(y.width() == 11);
    const std::size_t taps = 41;
    for (std::size_t b = 0; b < 4; ++b) {
      const auto g = gaussian_taps(spec.gnyq_ms[b], 4, taps);
      const auto blurred = brute_conv(x.extract_band(b), outer(g), taps);
      for (std::size_t r = 0; r < 12; ++r)
        for (std::size_t c = 0; c < 11; ++c) CHECK(y.at(b, r, c) == doctest::Approx(blurred.at(0, 4 * r, 4 * c)).epsilon(1e-11));
    }
    const auto p = degrade(x.extract_band(0), spec, BlurTarget::kPan);
    const auto gp = gaussian_taps(spec.gnyq_pan, 4, taps);
    CHECK(p.at(0, 5, 5) == doctest::Approx(brute_conv(x.extract_band(0), outer(gp), taps).at(0, 20, 20)).epsilon(1e-11));
  }

  TEST_CASE("degrade shape and constants") {
    const auto spec = wv3();
    const auto y = degrade(ImageTensor(512, 512, 8, 0.25), spec, BlurTarget::kMultispectral);
    CHECK(y.height() == 128);
    CHECK(y.bands() == 8);
    for (double v : y.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(degrade(ImageTensor(30, 32, 8), spec, BlurTarget::kMultispectral), DimensionError);
  }

  TEST_CASE("degrade of the upsampled image is close to the LR blur on smooth input") {
    auto spec = SensorSpec::uniform(1, 0.3);
    ImageTensor ramp(32, 32, 1);
    for (std::size_t r = 0; r < 32; ++r)
      for (std::size_t c = 0; c < 32; ++c) ramp.at(0, r, c) = 0.01 * r + 0.015 * c + 0.1;
    const auto lhs = degrade(upsample_poly(ramp, 4), spec, BlurTarget::kMultispectral);
    // At LR scale the blur has sigma / r; for a ramp any unit-sum symmetric blur is the identity inside.
    const auto g = gaussian_taps(0.3, 1, 9);
    const auto rhs = brute_conv(ramp, outer(g), 9);
    CHECK(max_abs_diff(lhs, rhs) < 5e-2);
  }

  TEST_CASE("adjoint degrade dot-product identity") {
    const auto spec = qb();
    const auto x = zero_border(random_tensor(64, 64, 4, 32, -1, 1), 8);
    const auto y = zero_border(random_tensor(16, 16, 4, 33, -1, 1), 2);
    for (auto target : {BlurTarget::kMultispectral}) {
      const double lhs = dot(degrade(x, spec, target), y), rhs = dot(x, adjoint_degrade(y, spec, target));
      CHECK(rel_err(lhs, rhs) < 1e-6);
    }
    const auto p = random_tensor(64, 64, 1, 34, -1, 1), q = random_tensor(16, 16, 1, 35, -1, 1);
    CHECK(rel_err(dot(degrade(p, spec, BlurTarget::kPan), q), dot(p, adjoint_degrade(q, spec, BlurTarget::kPan))) < 1e-12);
    CHECK(rel_err(dot(mtf_blur(x, spec, BlurTarget::kMultispectral), x),
                  dot(x, adjoint_mtf_blur(x, spec, BlurTarget::kMultispectral))) < 1e-12);
  }
}
