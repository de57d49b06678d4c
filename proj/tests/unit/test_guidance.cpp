#include <doctest.h>

#include "fmgpan/error.hpp"
#include "fmgpan/guidance.hpp"
#include "fmgpan/metrics.hpp"
#include "fmgpan/synthetic.hpp"
#include "fmgpan/tensor_io.hpp"
#include "support.hpp"

using namespace fmgpan;
using namespace testsupport;

TEST_SUITE("guidance") {
  TEST_CASE("source parsing") {
    CHECK(GuidanceSource::parse("mtf-glp").kind == GuidanceKind::kMtfGlp);
    CHECK(GuidanceSource::parse("bdsd").kind == GuidanceKind::kBdsd);
    const auto f = GuidanceSource::parse("file:/tmp/x.fmgt");
    CHECK(f.kind == GuidanceKind::kExternalFile);
    CHECK(f.path == "/tmp/x.fmgt");
    CHECK(f.describe() == "file:/tmp/x.fmgt");
    CHECK_THROWS_AS(GuidanceSource::parse("gan"), ConfigError);
    CHECK_THROWS_AS(GuidanceSource::parse("file:"), ConfigError);
  }

  TEST_CASE("external reference loading") {
    TempDir tmp("ref");
    auto x = random_tensor(16, 16, 4, 110);
    x.data()[3] = 1.5;
    x.data()[7] = -0.2;
    write_tensor(tmp / "x.fmgt", x);
    const auto r = load_reference(tmp / "x.fmgt", 16, 16, 4);
    CHECK(r.clamped_samples == 2);
    CHECK(r.tensor.data()[3] == 1.0);
    CHECK(r.tensor.data()[7] == 0.0);
    CHECK_THROWS_AS(load_reference(tmp / "x.fmgt", 16, 16, 8), FormatError);
    CHECK_THROWS_AS(load_reference(tmp / "none.fmgt", 16, 16, 4), IoError);
  }

  TEST_CASE("constant PAN returns the upsampled image") {
    const auto spec = qb();
    const auto y = random_tensor(16, 16, 4, 111);
    const ImageTensor pan(64, 64, 1, 0.5);
    const auto yhat = upsample_poly(y, 4);
    CHECK(max_abs_diff(fuse_mtf_glp(y, pan, spec).fused, yhat) == 0.0);
    CHECK(max_abs_diff(fuse_bdsd(y, pan, spec).fused, yhat) == 0.0);
  }

  TEST_CASE("bdsd injection examples") {
    const auto spec = SensorSpec::uniform(1, 0.3);
    const auto y = random_tensor(16, 16, 1, 112);
    const auto pan = random_tensor(64, 64, 1, 113);
    const auto yhat = upsample_poly(y, 4);
    const auto zero = DetailCoefficients::zeros(1);
    CHECK(max_abs_diff(fuse_bdsd(y, pan, spec, &zero).fused, yhat) == 0.0);

    // g = 1, w = 1: yhat + (P - yhat) = P.
    DetailCoefficients h = DetailCoefficients::zeros(1);
    h.values(0, 0) = -1.0;
    h.values(0, 1) = 1.0;
    const auto gw = bdsd_gains(h);
    CHECK(gw.g[0] == doctest::Approx(1.0));
    CHECK(gw.w(0, 0) == doctest::Approx(1.0));
    CHECK(max_abs_diff(fuse_bdsd(y, pan, spec, &h).fused, pan) < 1e-12);
  }

  TEST_CASE("bdsd estimates once") {
    const auto spec = qb();
    const auto y = random_tensor(16, 16, 4, 114);
    const auto before = estimate_coefficients_call_count();
    fuse_bdsd(y, random_tensor(64, 64, 1, 115), spec);
    CHECK(estimate_coefficients_call_count() == before + 1);
  }

  TEST_CASE("classical fusers beat plain upsampling on a synthetic scene") {
    const auto spec = qb();
    SceneOptions opts;
    opts.size = 128;
    opts.pan_nonlinearity = 0.0;
    const auto scene = make_scene(opts, spec);
    const auto yhat = upsample_poly(scene.lrms, 4);
    const auto glp = fuse_mtf_glp(scene.lrms, scene.pan, spec).fused;
    const auto bd = fuse_bdsd(scene.lrms, scene.pan, spec).fused;
    CHECK(glp.same_shape(yhat));
    CHECK(ergas(glp, scene.hrms, 4) < ergas(yhat, scene.hrms, 4));
    CHECK(ergas(bd, scene.hrms, 4) < ergas(yhat, scene.hrms, 4));
  }
}
