// fmg: command-line front end for the fmgpan library.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "fmgpan/error.hpp"
#include "fmgpan/pipeline.hpp"
#include "fmgpan/synthetic.hpp"
#include "fmgpan/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int code_of(fmgpan::ExitCode c) { return static_cast<int>(c); }

json read_json(const fs::path& p, const std::string& what) {
  std::ifstream is(p);
  if (!is) throw fmgpan::IoError("cannot open " + what + " " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw fmgpan::ConfigError("bad " + what + " " + p.string() + ": " + e.what());
  }
}

// One setting resolved through CLI > config file > preset > default.
class Layers {
 public:
  Layers(const json& config, const json& preset) : config_(config), preset_(preset) {}

  template <typename T>
  T pick(const std::string& key, const std::optional<T>& cli, T fallback) {
    try {
      if (cli) return note(key, "cli", *cli);
      if (config_.contains(key)) return note(key, "config", config_.at(key).get<T>());
      if (preset_.contains(key)) return note(key, "preset", preset_.at(key).get<T>());
    } catch (const json::exception& e) {
      throw fmgpan::ConfigError("setting '" + key + "': " + e.what());
    }
    return note(key, "default", fallback);
  }

  std::vector<std::pair<std::string, std::string>> provenance() const { return {seen_.begin(), seen_.end()}; }

 private:
  template <typename T>
  T note(const std::string& key, const std::string& src, T v) {
    seen_[key] = src;
    return v;
  }
  const json& config_;
  const json& preset_;
  std::map<std::string, std::string> seen_;
};

struct FuseFlags {
  std::string lrms, pan, out;
  std::optional<std::string> sensor, config, guidance, variant, warm_start, loss_norm;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, patch;
  std::optional<double> lr, lambda_pr, lambda_spe, lambda_phy;
  bool cross_sensor = false;
  bool dump_detail = false;
};

fmgpan::SensorSpec sensor_from(const std::optional<std::string>& name, const fs::path& sidecar_source) {
  std::string id;
  if (name) {
    id = *name;
  } else if (auto side = fmgpan::read_tensor(sidecar_source).sidecar) {
    id = side->sensor;
  } else {
    throw fmgpan::ConfigError("no --sensor given and " + sidecar_source.string() + " has no sidecar");
  }
  return fmgpan::resolve_sensor_spec(id, fmgpan::default_preset_dir());
}

fs::path preset_file_for(const std::string& id) {
  if (fs::is_regular_file(id)) return id;
  std::string lower = id;
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return fmgpan::default_preset_dir() / (lower + ".json");
}

int run_fuse(const FuseFlags& f) {
  const json config = f.config ? read_json(*f.config, "config file") : json::object();
  std::optional<std::string> sensor_id = f.sensor;
  if (!sensor_id && config.contains("sensor")) sensor_id = config.at("sensor").get<std::string>();
  const fmgpan::SensorSpec spec = sensor_from(sensor_id, f.lrms);
  const json preset_raw = read_json(preset_file_for(sensor_id ? *sensor_id : spec.name), "sensor preset");

  Layers L(config, preset_raw);
  fmgpan::FuseCommand cmd;
  cmd.lrms = f.lrms;
  cmd.pan = f.pan;
  cmd.out = f.out;
  cmd.spec = spec;
  cmd.dump_detail = f.dump_detail;

  const bool cross = L.pick<bool>("cross_sensor", f.cross_sensor ? std::optional<bool>(true) : std::nullopt, false);
  cmd.config.epochs = L.pick<std::size_t>("epochs", f.epochs,
                                          cross ? fmgpan::kCrossSensorEpochs : fmgpan::kDefaultEpochs);
  cmd.config.lr = L.pick<double>("lr", f.lr, cmd.config.lr);
  cmd.config.lambda_pr = L.pick<double>("lambda_pr", f.lambda_pr, cmd.config.lambda_pr);
  cmd.config.lambda_spe = L.pick<double>("lambda_spe", f.lambda_spe, cmd.config.lambda_spe);
  cmd.config.lambda_phy = L.pick<double>("lambda_phy", f.lambda_phy, cmd.config.lambda_phy);
  cmd.config.seed = L.pick<std::uint64_t>("seed", f.seed, 0);
  cmd.patch = L.pick<std::size_t>("patch", f.patch, fmgpan::kDefaultPfPatch);
  const std::string warm = L.pick<std::string>("warm_start", f.warm_start, "");
  if (!warm.empty()) cmd.config.warm_start = fs::path(warm);
  cmd.guidance = fmgpan::GuidanceSource::parse(L.pick<std::string>("guidance", f.guidance, "mtf-glp"));
  cmd.variant = fmgpan::parse_variant(L.pick<std::string>("variant", f.variant, "default"));
  const std::string norm = L.pick<std::string>("loss_norm", f.loss_norm, "mean");
  if (norm == "mean") {
    cmd.loss_norm = fmgpan::LossNormalization::kMean;
  } else if (norm == "sum") {
    cmd.loss_norm = fmgpan::LossNormalization::kSum;
  } else {
    throw fmgpan::ConfigError("loss_norm must be mean or sum");
  }
  cmd.provenance = L.provenance();
  cmd.provenance.emplace_back("sensor", f.sensor ? "cli" : (config.contains("sensor") ? "config" : "sidecar"));

  const auto run = fmgpan::cmd_fuse(cmd);
  const auto& t = run.manifest.timing;
  std::printf("wrote %s  (%zu epochs, final loss %.6g, %.2f s total, %.0f%% training)\n", f.out.c_str(),
              run.history.size(), run.history.empty() ? 0.0 : run.history.back().l_total, t.total,
              t.total > 0 ? 100.0 * t.training / t.total : 0.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fmg - instance-wise pansharpening adaptation"};
  app.require_subcommand(1);

  FuseFlags ff;
  auto* fuse = app.add_subcommand("fuse", "adapt the small network on one PAN/LRMS pair and write the fused image");
  fuse->add_option("--lrms", ff.lrms, "low-resolution MS tensor (.fmgt)")->required();
  fuse->add_option("--pan", ff.pan, "PAN tensor (.fmgt)")->required();
  fuse->add_option("--out", ff.out, "fused output tensor")->required();
  fuse->add_option("--sensor", ff.sensor, "preset name (wv3, wv2, gf2, qb) or preset JSON path");
  fuse->add_option("--config", ff.config, "JSON config file");
  fuse->add_option("--guidance", ff.guidance, "file:<path> | mtf-glp | bdsd");
  fuse->add_option("--seed", ff.seed);
  fuse->add_option("--epochs", ff.epochs);
  fuse->add_option("--lr", ff.lr);
  fuse->add_option("--lambda-pr", ff.lambda_pr);
  fuse->add_option("--lambda-spe", ff.lambda_spe);
  fuse->add_option("--lambda-phy", ff.lambda_phy);
  fuse->add_option("--patch", ff.patch, "PF estimation patch side (HR pixels)");
  fuse->add_option("--variant", ff.variant)->check(CLI::IsMember({"default", "light", "lightweight"}));
  fuse->add_option("--warm-start", ff.warm_start, "parameter file from an earlier run");
  fuse->add_option("--loss-norm", ff.loss_norm)->check(CLI::IsMember({"mean", "sum"}));
  fuse->add_flag("--cross-sensor", ff.cross_sensor, "use the longer cross-sensor epoch budget");
  fuse->add_flag("--dump-detail", ff.dump_detail, "also write the Detail tensor and H");

  std::string d_hrms, d_pan, d_out;
  std::optional<std::string> d_sensor;
  auto* deg = app.add_subcommand("degrade", "simulate a reduced-resolution pair from HRMS and PAN");
  deg->add_option("--hrms", d_hrms)->required();
  deg->add_option("--pan", d_pan)->required();
  deg->add_option("--sensor", d_sensor);
  deg->add_option("--out", d_out, "output prefix; writes <prefix>_lrms.fmgt and <prefix>_pan_lr.fmgt")->required();

  std::string g_lrms, g_pan, g_out, g_source = "mtf-glp";
  std::optional<std::string> g_sensor;
  std::size_t g_patch = fmgpan::kDefaultPfPatch;
  auto* guide = app.add_subcommand("guide", "produce a pseudo-reference image");
  guide->add_option("--lrms", g_lrms)->required();
  guide->add_option("--pan", g_pan)->required();
  guide->add_option("--guidance", g_source, "file:<path> | mtf-glp | bdsd");
  guide->add_option("--sensor", g_sensor);
  guide->add_option("--patch", g_patch);
  guide->add_option("--out", g_out)->required();

  std::string e_fused, e_out, e_mode = "full";
  std::optional<std::string> e_lrms, e_pan, e_truth, e_sensor, e_heatmap;
  std::size_t e_block = fmgpan::kDefaultBlockSize;
  auto* eval = app.add_subcommand("evaluate", "quality report for a fused image");
  eval->add_option("--fused", e_fused)->required();
  eval->add_option("--mode", e_mode)->check(CLI::IsMember({"full", "reduced"}));
  eval->add_option("--lrms", e_lrms);
  eval->add_option("--pan", e_pan);
  eval->add_option("--truth", e_truth);
  eval->add_option("--sensor", e_sensor);
  eval->add_option("--block", e_block);
  eval->add_option("--heatmap", e_heatmap, "PNG of the local HQNR map (full mode)");
  eval->add_option("--out", e_out, "JSON report")->required();

  std::size_t s_size = 256;
  std::uint64_t s_seed = 7;
  std::string s_sensor = "qb", s_out;
  auto* synth = app.add_subcommand("synth", "write a procedural test scene (hrms, pan, lrms)");
  synth->add_option("--size", s_size);
  synth->add_option("--seed", s_seed);
  synth->add_option("--sensor", s_sensor);
  synth->add_option("--out", s_out, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : code_of(fmgpan::ExitCode::kUsage);
  }

  try {
    if (*fuse) return run_fuse(ff);
    if (*deg) {
      const auto spec = sensor_from(d_sensor, d_hrms);
      const auto o = fmgpan::cmd_degrade(d_hrms, d_pan, spec, d_out);
      std::printf("wrote %s %s\n", o.lrms.c_str(), o.pan_lr.c_str());
      return 0;
    }
    if (*guide) {
      const auto spec = sensor_from(g_sensor, g_lrms);
      const auto g = fmgpan::cmd_guide(g_lrms, g_pan, spec, fmgpan::GuidanceSource::parse(g_source), g_out, g_patch);
      std::printf("wrote %s%s\n", g_out.c_str(), g.degenerate ? " (degenerate fit)" : "");
      return 0;
    }
    if (*eval) {
      fmgpan::EvaluateCommand cmd;
      cmd.fused = e_fused;
      cmd.mode = e_mode == "full" ? fmgpan::ReportMode::kFullRes : fmgpan::ReportMode::kReducedRes;
      if (e_lrms) cmd.lrms = *e_lrms;
      if (e_pan) cmd.pan = *e_pan;
      if (e_truth) cmd.truth = *e_truth;
      if (e_heatmap) cmd.heatmap = *e_heatmap;
      cmd.spec = sensor_from(e_sensor, e_fused);
      cmd.block = e_block;
      cmd.out = e_out;
      const auto rep = fmgpan::cmd_evaluate(cmd);
      for (const auto& [k, v] : rep.scalars) std::printf("%-20s %.6f\n", k.c_str(), v);
      return 0;
    }
    if (*synth) {
      const auto spec = fmgpan::resolve_sensor_spec(s_sensor, fmgpan::default_preset_dir());
      fmgpan::SceneOptions opts;
      opts.size = s_size;
      opts.bands = spec.bands;
      opts.seed = s_seed;
      const auto scene = fmgpan::make_scene(opts, spec);
      const fmgpan::TensorSidecar side{spec.name, spec.ratio};
      fmgpan::write_tensor(s_out + "_hrms.fmgt", scene.hrms, side);
      fmgpan::write_tensor(s_out + "_pan.fmgt", scene.pan, side);
      fmgpan::write_tensor(s_out + "_lrms.fmgt", scene.lrms, side);
      std::printf("wrote %s_{hrms,pan,lrms}.fmgt\n", s_out.c_str());
      return 0;
    }
  } catch (const fmgpan::Error& e) {
    std::fprintf(stderr, "fmg: %s\n", e.what());
    return code_of(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fmg: %s\n", e.what());
    return code_of(fmgpan::ExitCode::kFailure);
  }
  return code_of(fmgpan::ExitCode::kUsage);
}
