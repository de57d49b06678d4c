#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmgpan/adaptive_net.hpp"
#include "fmgpan/error.hpp"
#include "fmgpan/guidance.hpp"
#include "fmgpan/losses.hpp"
#include "fmgpan/metrics.hpp"
#include "fmgpan/mtf.hpp"
#include "fmgpan/pf_module.hpp"
#include "fmgpan/tensor.hpp"

namespace fmgpan {

/// Wall-clock seconds per stage. `other` is the total minus the four named
/// stages.
struct StageTimes {
  double guidance = 0.0;
  double pf = 0.0;
  double training = 0.0;
  double inference = 0.0;
  double other = 0.0;
  double total = 0.0;
};

/// Start/end offsets (seconds since the run began) of a stage.
struct StageSpan {
  std::string name;
  double start = 0.0;
  double end = 0.0;
};

struct EpochLoss {
  std::size_t epoch = 0;
  double l_pr = 0.0;
  double l_spe = 0.0;
  double l_phy = 0.0;
  double l_total = 0.0;
};

/// Everything needed to reproduce a fusion run.
struct RunManifest {
  std::string lrms_path;
  std::string pan_path;
  std::string output_path;
  std::string sensor;
  std::string guidance;
  std::string variant = "default";
  std::string loss_norm = "mean";
  std::string warm_start;
  AdaptationConfig config;
  std::size_t patch = kDefaultPfPatch;
  std::size_t parameter_count = 0;
  std::size_t clamped_reference_samples = 0;
  bool guidance_degenerate = false;
  bool coefficients_degenerate = false;
  Matrix coefficients;
  StageTimes timing;
  std::vector<StageSpan> stages;
  /// Where each effective setting came from (cli, config, preset, default).
  std::vector<std::pair<std::string, std::string>> provenance;
};

struct FusionRequest {
  ImageTensor lrms;
  ImageTensor pan;
  SensorSpec spec;
  GuidanceSource guidance;
  /// Pre-loaded pseudo-reference for external-file guidance; loaded from
  /// guidance.path when empty.
  std::optional<ImageTensor> reference;
  AdaptationConfig config;
  Variant variant = Variant::kDefault;
  std::size_t patch = kDefaultPfPatch;
  LossNormalization loss_norm = LossNormalization::kMean;
  /// Random initialization is used when neither this nor config.warm_start is set.
  std::optional<NetworkParams> initial_params;
};

struct FusionRun {
  ImageTensor x_star;
  ImageTensor yhat;
  ImageTensor guidance;
  PfProducts pf;
  NetworkParams params;
  std::vector<EpochLoss> history;
  RunManifest manifest;
};

/// The adaptation loop: upsample, guidance, PF precompute, parameter init
/// (or warm start), one full-image Adam step per epoch, final inference.
FusionRun run_fusion(const FusionRequest& request);

/// Stage-tagged failure; keeps the exit code of the underlying error.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const Error& cause)
      : Error("[" + stage + "] " + cause.what(), cause.code()), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// ---------------------------------------------------------------------------
// File-level commands

struct FuseCommand {
  std::filesystem::path lrms;
  std::filesystem::path pan;
  std::filesystem::path out;
  SensorSpec spec;
  GuidanceSource guidance;
  AdaptationConfig config;
  Variant variant = Variant::kDefault;
  std::size_t patch = kDefaultPfPatch;
  LossNormalization loss_norm = LossNormalization::kMean;
  bool dump_detail = false;
  std::vector<std::pair<std::string, std::string>> provenance;
};

/// Paths written next to the fused tensor.
struct FuseOutputs {
  std::filesystem::path tensor;
  std::filesystem::path manifest;
  std::filesystem::path loss_csv;
  std::filesystem::path params;
  std::filesystem::path detail;        // only with dump_detail
  std::filesystem::path coefficients;  // only with dump_detail
};

FuseOutputs fuse_outputs_for(const std::filesystem::path& out);

/// Runs the fusion and writes tensor, manifest, loss CSV and parameters.
/// Outputs are staged under temporary names and renamed on success.
FusionRun cmd_fuse(const FuseCommand& cmd);

struct DegradeOutputs {
  std::filesystem::path lrms;
  std::filesystem::path pan_lr;
};

/// Wald-protocol simulation: y = degrade(hrms, MS), pan_lr = degrade(pan, PAN).
DegradeOutputs cmd_degrade(const std::filesystem::path& hrms, const std::filesystem::path& pan,
                           const SensorSpec& spec, const std::filesystem::path& out_prefix);

struct GuideResult {
  ImageTensor guidance;
  bool degenerate = false;
  std::size_t clamped_samples = 0;
};

/// In-memory guidance; `pf_coefficients` is reused by bdsd when given.
GuideResult make_guidance(const ImageTensor& lrms, const ImageTensor& pan, const SensorSpec& spec,
                          const GuidanceSource& source, std::size_t patch = kDefaultPfPatch,
                          const DetailCoefficients* pf_coefficients = nullptr);

GuideResult cmd_guide(const std::filesystem::path& lrms, const std::filesystem::path& pan, const SensorSpec& spec,
                      const GuidanceSource& source, const std::filesystem::path& out,
                      std::size_t patch = kDefaultPfPatch);

struct EvaluateCommand {
  std::filesystem::path fused;
  ReportMode mode = ReportMode::kFullRes;
  std::optional<std::filesystem::path> lrms;
  std::optional<std::filesystem::path> pan;
  std::optional<std::filesystem::path> truth;
  SensorSpec spec;
  std::size_t block = kDefaultBlockSize;
  std::filesystem::path out;  // JSON report
  std::optional<std::filesystem::path> heatmap;
};

QualityReport cmd_evaluate(const EvaluateCommand& cmd);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history);
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}  // namespace fmgpan
