// Acceptance run: prints one PASS/FAIL line per criterion, exits nonzero on any FAIL.

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "fmgpan/nnls.hpp"
#include "fmgpan/pipeline.hpp"
#include "fmgpan/synthetic.hpp"
#include "fmgpan/tensor_io.hpp"
#include "support.hpp"

using namespace fmgpan;
using namespace testsupport;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %-34s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), since(t0));
  std::fflush(stdout);
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 2: finite differences

double fd_worst_network(Variant v) {
  const std::size_t c = 4;
  auto p = init_params(v, c, 11);
  const auto yhat = random_tensor(32, 32, c, 12);
  const auto delta = build_input(random_tensor(32, 32, 1, 13), yhat);
  const auto g = random_tensor(32, 32, c, 14, -1, 1);
  const auto grads = backward(p, forward(p, delta, yhat).cache, g);
  std::mt19937_64 gen(15);
  double worst = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    for (int which = 0; which < 2; ++which) {
      auto& theta = which ? p.layers[l].bias : p.layers[l].weight;
      const auto& an = which ? grads.layers[l].bias : grads.layers[l].weight;
      for (int s = 0; s < 8; ++s) {
        const std::size_t i = gen() % theta.size();
        const double keep = theta[i], h = 1e-6;
        theta[i] = keep + h;
        const double up = dot(forward(p, delta, yhat).x_star, g);
        theta[i] = keep - h;
        const double dn = dot(forward(p, delta, yhat).x_star, g);
        theta[i] = keep;
        worst = std::max(worst, rel_err((up - dn) / (2 * h), an[i], 1e-6));
      }
    }
  return worst;
}

double fd_worst_loss(const std::function<double(const ImageTensor&)>& f, ImageTensor x, const ImageTensor& grad,
                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  double worst = 0.0;
  const std::size_t border = 4;
  for (int s = 0; s < 40; ++s) {
    const std::size_t b = gen() % x.bands();
    const std::size_t r = border + gen() % (x.height() - 2 * border), c = border + gen() % (x.width() - 2 * border);
    const double keep = x.at(b, r, c), h = 1e-4;
    x.at(b, r, c) = keep + h;
    const double up = f(x);
    x.at(b, r, c) = keep - h;
    const double dn = f(x);
    x.at(b, r, c) = keep;
    worst = std::max(worst, rel_err((up - dn) / (2 * h), grad.at(b, r, c), 1e-10));
  }
  return worst;
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto spec = qb();
  const auto x = random_tensor(32, 32, 4, 20), ref = random_tensor(32, 32, 4, 21);
  const auto y = random_tensor(8, 8, 4, 22), d = random_tensor(32, 32, 4, 23, -0.1, 0.1);
  const double pr = fd_worst_loss([&](const ImageTensor& v) { return loss_pr(v, ref).value; }, x, loss_pr(x, ref).grad, 1);
  const double spe =
      fd_worst_loss([&](const ImageTensor& v) { return loss_spe(v, y, spec).value; }, x, loss_spe(x, y, spec).grad, 2);
  const double phy =
      fd_worst_loss([&](const ImageTensor& v) { return loss_phy(v, d, spec).value; }, x, loss_phy(x, d, spec).grad, 3);
  const double conv = fd_worst_network(Variant::kDefault);
  const double sep = fd_worst_network(Variant::kLightweight);
  const double secs = since(t0);
  const double losses = std::max({pr, spe, phy});
  return {losses <= 1e-5 && std::max(conv, sep) <= 1e-3 && secs < 60.0,
          fmt("loss rel %.1e, conv rel %.1e, dw/pw rel %.1e", losses, conv, sep)};
}

// ---------------------------------------------------------------------------
// 3: constrained solver

Eigen::VectorXd box_projected_gradient(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& lo,
                                       const Eigen::VectorXd& hi) {
  const Eigen::MatrixXd q = a.transpose() * a;
  const Eigen::VectorXd l = a.transpose() * b;
  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(a.cols()), z = x;
  double t = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd xn = (z - (q * z - l) / lip).cwiseMax(lo).cwiseMin(hi);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = xn + ((t - 1.0) / tn) * (xn - x);
    const bool done = (xn - x).norm() < 1e-15;
    x = xn;
    t = tn;
    if (done) break;
  }
  return x;
}

Outcome solver_oracle() {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  bool signs = true;
  const double inf = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 1 + trial % 3;
    ReducedSystem sys;
    sys.m_rd.resize(c + 1, 50);
    sys.target.resize(c, 50);
    for (int i = 0; i < sys.m_rd.size(); ++i) sys.m_rd.data()[i] = nd(gen);
    for (int i = 0; i < sys.target.size(); ++i) sys.target.data()[i] = nd(gen);
    const auto h = estimate_coefficients(sys);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(c + 1, -inf), hi = Eigen::VectorXd::Zero(c + 1);
    lo[c] = 0.0;
    hi[c] = inf;
    for (int k = 0; k < c; ++k) {
      const auto ref = box_projected_gradient(sys.m_rd.transpose(), sys.target.row(k).transpose(), lo, hi);
      for (int i = 0; i <= c; ++i) {
        worst = std::max(worst, std::abs(h.values(k, i) - ref[i]));
        if (i < c ? h.values(k, i) > 0.0 : h.values(k, i) < 0.0) signs = false;
      }
    }
  }
  return {worst <= 1e-6 && signs, fmt("max |H - oracle| %.1e, signs %s", worst, signs ? "exact" : "violated")};
}

// ---------------------------------------------------------------------------
// 4: adjoints

Outcome adjoint_suite() {
  const auto spec = qb();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = zero_border(random_tensor(32, 32, 1, 30 + s, -1, 1), 8);
    const auto y = zero_border(random_tensor(32, 32, 1, 40 + s, -1, 1), 8);
    const auto k = KernelSpec::from_weights(5, random_tensor(5, 5, 1, 50 + s, -1, 1).data());
    worst = std::max(worst, rel_err(dot(conv2d_same(x, k), y), dot(x, adjoint_conv2d(y, k))));
    const auto g = KernelSpec::from_separable(gaussian_taps(0.3, 4, 15));
    worst = std::max(worst, rel_err(dot(conv2d_same(x, g), y), dot(x, adjoint_conv2d(y, g))));

    const auto hx = zero_border(random_tensor(64, 64, 4, 60 + s, -1, 1), 8);
    const auto ly = zero_border(random_tensor(16, 16, 4, 70 + s, -1, 1), 2);
    worst = std::max(worst, rel_err(dot(degrade(hx, spec, BlurTarget::kMultispectral), ly),
                                    dot(hx, adjoint_degrade(ly, spec, BlurTarget::kMultispectral))));
    const auto px = hx.extract_band(0);
    const auto py = ly.extract_band(0);
    worst = std::max(worst, rel_err(dot(degrade(px, spec, BlurTarget::kPan), py),
                                    dot(px, adjoint_degrade(py, spec, BlurTarget::kPan))));
  }
  return {worst <= 1e-6, fmt("worst relative gap %.1e", worst)};
}

// ---------------------------------------------------------------------------
// Shared synthetic scene for 5 and 8

struct SceneFiles {
  TempDir dir{"accept"};
  SyntheticScene scene;
  SensorSpec spec = qb();

  explicit SceneFiles(std::size_t size, std::size_t bands = 4, SensorSpec s = qb()) : spec(std::move(s)) {
    SceneOptions o;
    o.size = size;
    o.bands = bands;
    scene = make_scene(o, spec);
    write_tensor(dir / "lrms.fmgt", scene.lrms, TensorSidecar{spec.name, spec.ratio});
    write_tensor(dir / "pan.fmgt", scene.pan, TensorSidecar{spec.name, spec.ratio});
  }

  FuseCommand fuse(const std::string& out) const {
    FuseCommand c;
    c.lrms = dir / "lrms.fmgt";
    c.pan = dir / "pan.fmgt";
    c.out = dir / out;
    c.spec = spec;
    c.guidance = GuidanceSource::parse("mtf-glp");
    return c;
  }

  QualityReport full(const ImageTensor& x) const { return hqnr(x, scene.lrms, scene.pan, spec); }
};

SceneFiles& shared_scene() {
  static SceneFiles s(256);
  return s;
}

std::optional<FusionRun> g_full_run;

Outcome end_to_end() {
  auto& sf = shared_scene();
  const auto t0 = Clock::now();
  g_full_run = cmd_fuse(sf.fuse("x.fmgt"));
  const double secs = since(t0);
  const auto x = read_tensor(sf.dir / "x.fmgt").tensor;
  const auto& truth = sf.scene.hrms;
  const auto up = upsample_poly(sf.scene.lrms, 4);
  const auto& guide = g_full_run->guidance;
  const double sx = sam_degrees(x, truth), su = sam_degrees(up, truth), sg = sam_degrees(guide, truth);
  const double ex = ergas(x, truth, 4), eu = ergas(up, truth, 4), eg = ergas(guide, truth, 4);
  const double hx = sf.full(x).at("hqnr"), hg = sf.full(guide).at("hqnr");
  const bool a = sx < su && sx < sg && ex < eu && ex < eg;
  const bool b = hx >= hg;
  return {a && b && secs < 120.0,
          fmt("SAM %.3f (up %.3f, guide %.3f) ERGAS %.3f (up %.3f, guide %.3f) HQNR %.4f vs guide %.4f, %.1f s", sx, su,
              sg, ex, eu, eg, hx, hg, secs)};
}

Outcome overfit() {
  SceneOptions o;
  o.size = 64;
  const auto spec = qb();
  const auto scene = make_scene(o, spec);
  FusionRequest req;
  req.lrms = scene.lrms;
  req.pan = scene.pan;
  req.spec = spec;
  req.guidance = GuidanceSource::parse("file:ground-truth");
  req.reference = scene.hrms;
  req.config.epochs = 200;
  req.config.lambda_spe = 0.0;
  req.config.lambda_phy = 0.0;
  const auto run = run_fusion(req);
  const auto diff = run.x_star - scene.hrms;
  const double mse = dot(diff, diff) / static_cast<double>(diff.size());
  return {mse < 1e-4, fmt("mean square error to the reference %.2e", mse)};
}

Outcome parameter_counts() {
  const auto d8 = make_network(Variant::kDefault, 8).parameter_count();
  const auto d4 = make_network(Variant::kDefault, 4).parameter_count();
  const auto l8 = make_network(Variant::kLightweight, 8).parameter_count();
  const auto l4 = make_network(Variant::kLightweight, 4).parameter_count();
  const bool ok = d8 == 23144 && d4 == 20836 && std::abs(static_cast<double>(l8) - 6000.0) <= 900.0 &&
                  std::abs(static_cast<double>(l4) - 3700.0) <= 555.0;
  return {ok, fmt("default %zu / %zu, light %zu / %zu", d8, d4, l8, l4)};
}

Outcome ablation() {
  auto& sf = shared_scene();
  if (!g_full_run) g_full_run = cmd_fuse(sf.fuse("x.fmgt"));
  const auto full = sf.full(g_full_run->x_star);

  auto no_spe = sf.fuse("no_spe.fmgt");
  no_spe.config.lambda_spe = 0.0;
  const auto r_spe = sf.full(cmd_fuse(no_spe).x_star);

  auto no_guide = sf.fuse("no_guide.fmgt");
  no_guide.config.lambda_pr = 0.0;
  const auto r_guide = sf.full(cmd_fuse(no_guide).x_star);

  const bool ds_up = r_spe.at("d_s") > full.at("d_s");
  const bool hq_down = r_guide.at("hqnr") < full.at("hqnr");
  return {ds_up && hq_down, fmt("D_s full %.4f vs no-spectral %.4f; HQNR full %.4f vs no-guidance %.4f", full.at("d_s"),
                                r_spe.at("d_s"), full.at("hqnr"), r_guide.at("hqnr"))};
}

Outcome determinism() {
  SceneFiles sf(128);
  cmd_fuse(sf.fuse("a.fmgt"));
  cmd_fuse(sf.fuse("b.fmgt"));
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  const bool same = slurp(sf.dir / "a.fmgt") == slurp(sf.dir / "b.fmgt");
  return {same, same ? "X* files byte-identical" : "X* files differ"};
}

Outcome timing_shape() {
  SceneFiles sf(512, 8, wv3());
  const auto run = cmd_fuse(sf.fuse("x.fmgt"));
  const auto& t = run.manifest.timing;
  const double share = t.training / t.total;
  return {share > 0.5, fmt("training %.1f s of %.1f s (%.1f%%); guidance %.2f, pf %.2f, inference %.2f, other %.2f",
                           t.training, t.total, 100.0 * share, t.guidance, t.pf, t.inference, t.other)};
}

}  // namespace

int main() {
  report(1, "HQNR composition identity", [] {
    const double a = hqnr_from(0.0213, 0.0153), b = hqnr_from(0.0332, 0.0276);
    const bool ok = std::abs(a - 0.96373) < 5e-6 && std::abs(b - 0.9668 * 0.9724) < 1e-12 && std::abs(a - 0.9637) <= 5e-4 &&
                    std::abs(b - 0.9401) <= 5e-4;
    return Outcome{ok, fmt("%.5f and %.5f", a, b)};
  });
  report(2, "gradient suite", gradient_suite);
  report(3, "constrained solver oracle", solver_oracle);
  report(4, "adjoint identities", adjoint_suite);
  report(5, "synthetic end-to-end improvement", end_to_end);
  report(6, "overfit sanity", overfit);
  report(7, "parameter counts", parameter_counts);
  report(8, "ablation direction", ablation);
  report(9, "determinism", determinism);
  report(10, "timing shape", timing_shape);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
