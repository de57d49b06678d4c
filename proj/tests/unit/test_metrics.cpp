#include <doctest.h>

#include <png.h>
#include <random>

#include "fmgpan/error.hpp"
#include "fmgpan/metrics.hpp"
#include "fmgpan/synthetic.hpp"
#include "support.hpp"

using namespace fmgpan;
using namespace testsupport;

namespace {

double png_mean_gray(const std::filesystem::path& p) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  REQUIRE(png_image_begin_read_from_file(&img, p.c_str()));
  img.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  REQUIRE(png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr));
  double s = 0.0;
  for (auto v : buf) s += v;
  return s / static_cast<double>(buf.size());
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("Q on small blocks") {
    const std::vector<double> a{1, 2}, b{2, 4};
    // mu 1.5 / 3, var 0.25 / 1, cov 0.5: 4*0.5*4.5 / (1.25*11.25)
    CHECK(q_block(a, b) == doctest::Approx(0.64).epsilon(1e-12));
    const std::vector<double> r{0.3, 0.9, 0.1, 0.5};
    CHECK(q_block(r, r) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    CHECK(q_block(flat, r) < 1.0);
    CHECK(q_block(flat, flat) == 1.0);
  }

  TEST_CASE("Q index and Q2n") {
    const auto a = random_tensor(64, 64, 4, 90);
    CHECK(q2n(a, a) == doctest::Approx(1.0).epsilon(1e-10));
    const auto one = random_tensor(64, 64, 1, 91), two = one * 0.8 + random_tensor(64, 64, 1, 92) * 0.3;
    CHECK(q2n(one, two) == doctest::Approx(q_index(one, two)).epsilon(1e-12));

    auto biased = a;
    for (std::size_t b = 0; b < 4; ++b)
      for (double& v : biased.band(b)) v += 0.5 * static_cast<double>(b + 1);
    CHECK(q2n(a, biased) < 0.9);
    CHECK(q2n(a, random_tensor(64, 64, 4, 93)) < 0.5);
    // Band count not a power of two is padded.
    const auto c3 = random_tensor(64, 64, 3, 94);
    CHECK(q2n(c3, c3) == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("Cayley-Dickson products") {
    // Two components are the complex numbers.
    std::vector<double> out(2);
    cayley_dickson_multiply(std::vector<double>{1, 2}, std::vector<double>{3, -1}, out);
    CHECK(out[0] == doctest::Approx(5.0));
    CHECK(out[1] == doctest::Approx(5.0));
    // Quaternion units: i*j = k, j*i = -k.
    std::vector<double> q(4);
    cayley_dickson_multiply(std::vector<double>{0, 1, 0, 0}, std::vector<double>{0, 0, 1, 0}, q);
    CHECK(q[3] == doctest::Approx(1.0));
    cayley_dickson_multiply(std::vector<double>{0, 0, 1, 0}, std::vector<double>{0, 1, 0, 0}, q);
    CHECK(q[3] == doctest::Approx(-1.0));
    // Octonion norms multiply.
    const auto x = random_tensor(1, 1, 8, 95).data(), y = random_tensor(1, 1, 8, 96).data();
    std::vector<double> o(8);
    cayley_dickson_multiply(x, y, o);
    auto norm2 = [](const std::vector<double>& v) { double s = 0; for (double e : v) s += e * e; return s; };
    CHECK(norm2(o) == doctest::Approx(norm2(x) * norm2(y)).epsilon(1e-12));
  }

  TEST_CASE("HQNR composition") {
    CHECK(hqnr_from(0.0213, 0.0153) == doctest::Approx(0.96373).epsilon(1e-5));
    CHECK(hqnr_from(0.0332, 0.0276) == doctest::Approx(0.9668 * 0.9724).epsilon(1e-12));
    CHECK(std::abs(hqnr_from(0.0332, 0.0276) - 0.9401) <= 5e-4);
    CHECK(hqnr_from(0.0, 0.0) == 1.0);
  }

  TEST_CASE("spectral distortion") {
    const auto spec = qb();
    SceneOptions opts;
    opts.size = 128;
    const auto scene = make_scene(opts, spec);
    CHECK(d_lambda_khan(scene.hrms, scene.lrms, spec) == doctest::Approx(0.0).epsilon(1e-12));

    ImageTensor ramp(32, 32, 4);
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t r = 0; r < 32; ++r)
        for (std::size_t c = 0; c < 32; ++c) ramp.at(b, r, c) = 0.2 + 0.01 * r + 0.005 * c * (b + 1);
    const double dl = d_lambda_khan(upsample_poly(ramp, 4), ramp, spec);
    CHECK(dl >= 0.0);
    CHECK(dl < 0.05);
  }

  TEST_CASE("spatial distortion") {
    const auto spec = SensorSpec::uniform(4, 0.15, 0.15);
    const auto pan = random_tensor(128, 128, 1, 97, 0.2, 0.8);
    const auto fused = pan.replicate(4);
    const auto y = degrade(fused, spec, BlurTarget::kMultispectral);
    CHECK(d_s(fused, y, pan, spec) == doctest::Approx(0.0).epsilon(1e-10));
    const double ds = d_s(random_tensor(128, 128, 4, 98), y, pan, spec);
    CHECK(ds > 0.0);
    CHECK(ds <= 1.0);
  }

  TEST_CASE("full-resolution report and heatmap") {
    TempDir tmp("hqnr");
    const auto spec = qb();
    SceneOptions opts;
    opts.size = 128;
    const auto scene = make_scene(opts, spec);
    const auto fused = upsample_poly(scene.lrms, 4);
    const auto rep = hqnr(fused, scene.lrms, scene.pan, spec);
    CHECK(rep.at("hqnr") == doctest::Approx(hqnr_from(rep.at("d_lambda"), rep.at("d_s"))).epsilon(1e-12));
    REQUIRE(rep.block_map);
    CHECK(rep.block_map->height() == 4);
    CHECK(mean(rep.block_map->data()) == doctest::Approx(rep.at("hqnr")).epsilon(1e-10));
    write_heatmap_png(tmp / "h.png", rep);
    CHECK(std::abs(png_mean_gray(tmp / "h.png") / 255.0 - rep.at("hqnr")) < 0.01);
    write_report_json(tmp / "r.json", rep);
    CHECK(std::filesystem::file_size(tmp / "r.json") > 20);
  }

  TEST_CASE("reduced-resolution metrics") {
    const auto t = random_tensor(64, 64, 4, 99, 0.1, 0.9);
    const auto same = reduced_metrics(t, t);
    CHECK(same.at("sam") == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(same.at("ergas") == 0.0);
    CHECK(same.at("scc") == doctest::Approx(1.0));
    CHECK(same.at("q2n") == doctest::Approx(1.0).epsilon(1e-10));

    ImageTensor e1(1, 1, 2, std::vector<double>{1, 0}), e2(1, 1, 2, std::vector<double>{0, 1});
    CHECK(sam_degrees(e1, e2) == doctest::Approx(90.0));
    std::size_t skipped = 0;
    sam_degrees(ImageTensor(1, 1, 2), e2, &skipped);
    CHECK(skipped == 1);

    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd(0.0, 0.01);
    auto noisy = t;
    for (double& v : noisy.data()) v += nd(gen);
    double acc = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
      double mse = 0.0, mu = 0.0;
      for (std::size_t i = 0; i < t.plane_size(); ++i) {
        mse += std::pow(noisy.band(b)[i] - t.band(b)[i], 2);
        mu += t.band(b)[i];
      }
      mse /= t.plane_size();
      mu /= t.plane_size();
      acc += mse / (mu * mu);
    }
    const double expect = 25.0 * std::sqrt(acc / 4.0);
    CHECK(ergas(noisy, t, 4) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect > 0.0);

    auto dead = t;
    for (double& v : dead.band(2)) v = 0.0;
    CHECK_THROWS_AS(reduced_metrics(t, dead), DegeneracyError);
  }
}
