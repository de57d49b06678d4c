#include "fmgpan/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "fmgpan/error.hpp"
#include "fmgpan/tensor_io.hpp"

namespace fmgpan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename F>
auto in_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::exception& e) {
    throw StageError(name, Error(e.what()));
  }
}

class StageClock {
 public:
  explicit StageClock(Clock::time_point origin) : origin_(origin) {}

  template <typename F>
  auto run(const std::string& name, double& bucket, F&& f) -> decltype(f()) {
    const double start = seconds_since(origin_);
    struct Record {
      StageClock* self;
      const std::string& name;
      double& bucket;
      double start;
      ~Record() {
        const double end = seconds_since(self->origin_);
        bucket += end - start;
        self->spans_.push_back({name, start, end});
      }
    } record{this, name, bucket, start};
    return in_stage(name, std::forward<F>(f));
  }

  std::vector<StageSpan> spans() const { return spans_; }

 private:
  Clock::time_point origin_;
  std::vector<StageSpan> spans_;
};

}  // namespace

GuideResult make_guidance(const ImageTensor& lrms, const ImageTensor& pan, const SensorSpec& spec,
                          const GuidanceSource& source, std::size_t patch, const DetailCoefficients* pf_coefficients) {
  GuideResult out;
  switch (source.kind) {
    case GuidanceKind::kExternalFile: {
      ReferenceLoad ref = load_reference(source.path, pan.height(), pan.width(), lrms.bands());
      out.guidance = std::move(ref.tensor);
      out.clamped_samples = ref.clamped_samples;
      break;
    }
    case GuidanceKind::kMtfGlp: {
      FusionResult r = fuse_mtf_glp(lrms, pan, spec);
      out.guidance = std::move(r.fused);
      out.degenerate = r.degenerate;
      break;
    }
    case GuidanceKind::kBdsd: {
      FusionResult r = fuse_bdsd(lrms, pan, spec, pf_coefficients, patch);
      out.guidance = std::move(r.fused);
      out.degenerate = r.degenerate;
      break;
    }
  }
  return out;
}

FusionRun run_fusion(const FusionRequest& req) {
  const auto origin = Clock::now();
  StageClock clock(origin);
  FusionRun run;
  RunManifest& man = run.manifest;
  StageTimes& t = man.timing;

  in_stage("validate", [&] {
    req.spec.validate();
    req.config.validate();
    if (req.pan.bands() != 1) throw DimensionError("PAN must have a single band");
    if (req.lrms.bands() != req.spec.bands) {
      throw DimensionError("LRMS has " + std::to_string(req.lrms.bands()) + " bands, sensor '" + req.spec.name +
                           "' expects " + std::to_string(req.spec.bands));
    }
    if (req.pan.height() != req.lrms.height() * req.spec.ratio ||
        req.pan.width() != req.lrms.width() * req.spec.ratio) {
      throw DimensionError("PAN grid must be exactly ratio times the LRMS grid");
    }
  });

  run.yhat = in_stage("upsample", [&] { return upsample_poly(req.lrms, req.spec.ratio); });
  const ImageTensor delta = in_stage("input", [&] { return build_input(req.pan, run.yhat); });

  // PF precompute runs first so bdsd guidance can reuse the same H.
  run.pf = clock.run("pf", t.pf, [&] { return run_pf_module(req.lrms, run.yhat, req.pan, req.spec, req.patch); });

  clock.run("guidance", t.guidance, [&] {
    if (req.guidance.kind == GuidanceKind::kExternalFile && req.reference) {
      if (!req.reference->same_shape(run.yhat)) throw FormatError("pseudo-reference shape does not match H x W x c");
      run.guidance = *req.reference;
      return;
    }
    GuideResult g = make_guidance(req.lrms, req.pan, req.spec, req.guidance, req.patch, &run.pf.coefficients);
    run.guidance = std::move(g.guidance);
    man.guidance_degenerate = g.degenerate;
    man.clamped_reference_samples = g.clamped_samples;
  });

  run.params = in_stage("init", [&] {
    if (req.initial_params) return *req.initial_params;
    if (req.config.warm_start) return load_params(*req.config.warm_start, req.variant, req.spec.bands);
    return init_params(req.variant, req.spec.bands, req.config.seed);
  });
  run.params.reset_optimizer();

  clock.run("training", t.training, [&] {
    run.history.reserve(req.config.epochs);
    for (std::size_t epoch = 1; epoch <= req.config.epochs; ++epoch) {
      ForwardResult fwd = forward(run.params, delta, run.yhat);
      const LossBreakdown loss =
          total_loss(fwd.x_star, run.guidance, req.lrms, run.pf.detail, req.spec, req.config, req.loss_norm);
      if (!std::isfinite(loss.l_total)) {
        throw DegeneracyError("loss became non-finite at epoch " + std::to_string(epoch));
      }
      const Gradients grads = backward(run.params, fwd.cache, loss.grad_x_star);
      adam_step(run.params, grads, req.config);
      run.history.push_back({epoch, loss.l_pr, loss.l_spe, loss.l_phy, loss.l_total});
    }
  });

  run.x_star = clock.run("inference", t.inference, [&] {
    ImageTensor x = infer(run.params, delta, run.yhat);
    if (!x.all_finite()) throw DegeneracyError("fused output contains non-finite samples");
    x.min_valid = req.lrms.min_valid;
    x.max_valid = req.lrms.max_valid;
    return x;
  });

  t.total = seconds_since(origin);
  t.other = std::max(0.0, t.total - (t.guidance + t.pf + t.training + t.inference));
  man.stages = clock.spans();
  man.sensor = req.spec.name;
  man.guidance = req.guidance.describe();
  man.variant = to_string(req.variant);
  man.loss_norm = req.loss_norm == LossNormalization::kMean ? "mean" : "sum";
  man.config = req.config;
  man.warm_start = req.config.warm_start ? req.config.warm_start->string() : "";
  man.patch = req.patch;
  man.parameter_count = run.params.parameter_count();
  man.coefficients = run.pf.coefficients.values;
  man.coefficients_degenerate = run.pf.coefficients.degenerate;
  return run;
}

// ---------------------------------------------------------------------------
// Files

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "epoch,l_pr,l_spe,l_phy,l_total\n";
  os.precision(10);
  for (const auto& e : history) {
    os << e.epoch << ',' << e.l_pr << ',' << e.l_spe << ',' << e.l_phy << ',' << e.l_total << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (std::size_t i = 0; i < m.coefficients.rows; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.coefficients.cols; ++j) row.push_back(m.coefficients(i, j));
    coeffs.push_back(row);
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : m.stages) stages.push_back({{"name", s.name}, {"start", s.start}, {"end", s.end}});
  nlohmann::json provenance = nlohmann::json::object();
  for (const auto& [k, v] : m.provenance) provenance[k] = v;

  nlohmann::json j{
      {"inputs", {{"lrms", m.lrms_path}, {"pan", m.pan_path}}},
      {"output", m.output_path},
      {"sensor", m.sensor},
      {"guidance", m.guidance},
      {"variant", m.variant},
      {"loss_norm", m.loss_norm},
      {"warm_start", m.warm_start},
      {"config",
       {{"lr", m.config.lr},
        {"epochs", m.config.epochs},
        {"lambda_pr", m.config.lambda_pr},
        {"lambda_spe", m.config.lambda_spe},
        {"lambda_phy", m.config.lambda_phy},
        {"seed", m.config.seed},
        {"patch", m.patch}}},
      {"parameter_count", m.parameter_count},
      {"clamped_reference_samples", m.clamped_reference_samples},
      {"guidance_degenerate", m.guidance_degenerate},
      {"coefficients", {{"H", coeffs}, {"degenerate", m.coefficients_degenerate}}},
      {"timing",
       {{"guidance", m.timing.guidance},
        {"pf", m.timing.pf},
        {"training", m.timing.training},
        {"inference", m.timing.inference},
        {"other", m.timing.other},
        {"total", m.timing.total}}},
      {"stages", stages},
      {"provenance", provenance},
  };
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

FuseOutputs fuse_outputs_for(const std::filesystem::path& out) {
  const auto stem = out.parent_path() / out.stem();
  FuseOutputs o;
  o.tensor = out;
  o.manifest = stem.string() + ".manifest.json";
  o.loss_csv = stem.string() + ".loss.csv";
  o.params = stem.string() + ".params.fmgp";
  o.detail = stem.string() + ".detail.fmgt";
  o.coefficients = stem.string() + ".coefficients.json";
  return o;
}

namespace {

/// Files are written under "<name>.partial" and renamed together on commit;
/// anything left uncommitted is deleted.
class StagedOutputs {
 public:
  std::filesystem::path stage(const std::filesystem::path& final_path) {
    auto tmp = final_path;
    tmp += ".partial";
    entries_.push_back({tmp, final_path});
    return tmp;
  }
  void commit() {
    for (const auto& [tmp, fin] : entries_) {
      std::filesystem::rename(tmp, fin);
      const auto tmp_side = sidecar_path(tmp.string());
      if (std::filesystem::exists(tmp_side) && tmp_side != tmp) {
        std::filesystem::rename(tmp_side, sidecar_path(fin));
      }
    }
    entries_.clear();
  }
  ~StagedOutputs() {
    std::error_code ec;
    for (const auto& [tmp, fin] : entries_) {
      std::filesystem::remove(tmp, ec);
      std::filesystem::remove(sidecar_path(tmp), ec);
    }
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> entries_;
};

ImageTensor load_input(const std::filesystem::path& p, const std::string& what) {
  return in_stage("load", [&] {
    if (!std::filesystem::exists(p)) throw IoError(what + " " + p.string() + " does not exist");
    return read_tensor(p).tensor;
  });
}

}  // namespace

FusionRun cmd_fuse(const FuseCommand& cmd) {
  FusionRequest req;
  req.lrms = load_input(cmd.lrms, "LRMS");
  req.pan = load_input(cmd.pan, "PAN");
  req.spec = cmd.spec;
  req.guidance = cmd.guidance;
  req.config = cmd.config;
  req.variant = cmd.variant;
  req.patch = cmd.patch;
  req.loss_norm = cmd.loss_norm;

  FusionRun run = run_fusion(req);
  run.manifest.lrms_path = cmd.lrms.string();
  run.manifest.pan_path = cmd.pan.string();
  run.manifest.output_path = cmd.out.string();
  run.manifest.provenance = cmd.provenance;

  in_stage("write", [&] {
    const FuseOutputs o = fuse_outputs_for(cmd.out);
    StagedOutputs staged;
    write_tensor(staged.stage(o.tensor), run.x_star, TensorSidecar{cmd.spec.name, cmd.spec.ratio});
    write_loss_csv(staged.stage(o.loss_csv), run.history);
    save_params(staged.stage(o.params), run.params);
    if (cmd.dump_detail) {
      write_tensor(staged.stage(o.detail), run.pf.detail);
      write_coefficients_json(staged.stage(o.coefficients), run.pf.coefficients);
    }
    write_manifest(staged.stage(o.manifest), run.manifest);
    staged.commit();
  });
  return run;
}

DegradeOutputs cmd_degrade(const std::filesystem::path& hrms, const std::filesystem::path& pan,
                           const SensorSpec& spec, const std::filesystem::path& out_prefix) {
  const ImageTensor x = load_input(hrms, "HRMS");
  const ImageTensor p = load_input(pan, "PAN");
  const auto [y, pan_lr] = in_stage("degrade", [&] {
    if (p.bands() != 1) throw DimensionError("PAN must have a single band");
    if (!x.same_grid(p)) throw DimensionError("HRMS and PAN grids differ");
    return std::pair{degrade(x, spec, BlurTarget::kMultispectral), degrade(p, spec, BlurTarget::kPan)};
  });
  DegradeOutputs o{out_prefix.string() + "_lrms.fmgt", out_prefix.string() + "_pan_lr.fmgt"};
  in_stage("write", [&] {
    StagedOutputs staged;
    write_tensor(staged.stage(o.lrms), y, TensorSidecar{spec.name, spec.ratio});
    write_tensor(staged.stage(o.pan_lr), pan_lr, TensorSidecar{spec.name, spec.ratio});
    staged.commit();
  });
  return o;
}

GuideResult cmd_guide(const std::filesystem::path& lrms, const std::filesystem::path& pan, const SensorSpec& spec,
                      const GuidanceSource& source, const std::filesystem::path& out, std::size_t patch) {
  const ImageTensor y = load_input(lrms, "LRMS");
  const ImageTensor p = load_input(pan, "PAN");
  GuideResult g = in_stage("guidance", [&] {
    if (y.bands() != spec.bands) throw DimensionError("LRMS band count does not match the sensor");
    if (p.height() != y.height() * spec.ratio || p.width() != y.width() * spec.ratio) {
      throw DimensionError("PAN grid must be exactly ratio times the LRMS grid");
    }
    return make_guidance(y, p, spec, source, patch);
  });
  g.guidance.min_valid = y.min_valid;
  g.guidance.max_valid = y.max_valid;
  in_stage("write", [&] {
    StagedOutputs staged;
    write_tensor(staged.stage(out), g.guidance, TensorSidecar{spec.name, spec.ratio});
    staged.commit();
  });
  return g;
}

QualityReport cmd_evaluate(const EvaluateCommand& cmd) {
  const ImageTensor fused = load_input(cmd.fused, "fused image");
  QualityReport rep = in_stage("evaluate", [&] {
    if (cmd.mode == ReportMode::kFullRes) {
      if (!cmd.lrms || !cmd.pan) throw ConfigError("full-res evaluation needs --lrms and --pan");
      return hqnr(fused, load_input(*cmd.lrms, "LRMS"), load_input(*cmd.pan, "PAN"), cmd.spec, cmd.block);
    }
    if (!cmd.truth) throw ConfigError("reduced-res evaluation needs --truth");
    return reduced_metrics(fused, load_input(*cmd.truth, "ground truth"), cmd.spec.ratio, cmd.block);
  });
  in_stage("write", [&] {
    StagedOutputs staged;
    write_report_json(staged.stage(cmd.out), rep);
    if (cmd.heatmap) {
      if (!rep.block_map) throw ConfigError("--heatmap requires full-res mode");
      write_heatmap_png(staged.stage(*cmd.heatmap), rep);
    }
    staged.commit();
  });
  return rep;
}

}  // namespace fmgpan
