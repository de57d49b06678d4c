#pragma once

#include "fmgpan/adaptive_net.hpp"
#include "fmgpan/mtf.hpp"
#include "fmgpan/tensor.hpp"

namespace fmgpan {

/// Mean-square losses divide by the element count; sum mode keeps the raw
/// squared Frobenius norm.
enum class LossNormalization { kMean, kSum };

struct LossTerm {
  double value = 0.0;
  ImageTensor grad;  // dL/dx_star
};

struct LossBreakdown {
  double l_pr = 0.0;
  double l_spe = 0.0;
  double l_phy = 0.0;
  double l_total = 0.0;
  ImageTensor grad_x_star;
};

/// ||x_star - x_ref||^2.
LossTerm loss_pr(const ImageTensor& x_star, const ImageTensor& x_ref,
                 LossNormalization norm = LossNormalization::kMean);

/// ||y - degrade(x_star)||^2 with per-band MS kernels.
LossTerm loss_spe(const ImageTensor& x_star, const ImageTensor& y, const SensorSpec& spec,
                  LossNormalization norm = LossNormalization::kMean);

/// ||x_star - mtf_blur(x_star) - detail||^2 with per-band MS kernels.
LossTerm loss_phy(const ImageTensor& x_star, const ImageTensor& detail, const SensorSpec& spec,
                  LossNormalization norm = LossNormalization::kMean);

/// Weighted sum lambda_pr*l_pr + lambda_spe*l_spe + lambda_phy*l_phy.
/// Zero-weight terms are still reported when their input is non-empty but
/// contribute nothing to the gradient; an empty input reports 0.
LossBreakdown total_loss(const ImageTensor& x_star, const ImageTensor& x_ref, const ImageTensor& y,
                         const ImageTensor& detail, const SensorSpec& spec, const AdaptationConfig& cfg,
                         LossNormalization norm = LossNormalization::kMean);

/// Combines precomputed components; exposed for the weighted-sum identity.
double weighted_total(double l_pr, double l_spe, double l_phy, const AdaptationConfig& cfg);

}  // namespace fmgpan
