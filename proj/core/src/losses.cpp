#include "fmgpan/losses.hpp"

#include "fmgpan/error.hpp"

namespace fmgpan {

namespace {

double scale_for(std::size_t n, LossNormalization norm) {
  return norm == LossNormalization::kMean ? 1.0 / static_cast<double>(n) : 1.0;
}

double sum_sq(const ImageTensor& r) {
  double s = 0.0;
  for (double v : r.data()) s += v * v;
  return s;
}

}  // namespace

LossTerm loss_pr(const ImageTensor& x_star, const ImageTensor& x_ref, LossNormalization norm) {
  if (!x_star.same_shape(x_ref)) throw DimensionError("pseudo-reference shape differs from the prediction");
  ImageTensor r = x_star - x_ref;
  const double s = scale_for(r.size(), norm);
  LossTerm t;
  t.value = s * sum_sq(r);
  t.grad = std::move(r) * (2.0 * s);
  return t;
}

LossTerm loss_spe(const ImageTensor& x_star, const ImageTensor& y, const SensorSpec& spec, LossNormalization norm) {
  if (x_star.bands() != y.bands()) throw DimensionError("LRMS and prediction band counts differ");
  if (x_star.height() != y.height() * spec.ratio || x_star.width() != y.width() * spec.ratio) {
    throw DimensionError("prediction grid is not ratio times the LRMS grid");
  }
  ImageTensor r = y - degrade(x_star, spec, BlurTarget::kMultispectral);
  const double s = scale_for(r.size(), norm);
  LossTerm t;
  t.value = s * sum_sq(r);
  t.grad = adjoint_degrade(r, spec, BlurTarget::kMultispectral) * (-2.0 * s);
  return t;
}

LossTerm loss_phy(const ImageTensor& x_star, const ImageTensor& detail, const SensorSpec& spec,
                  LossNormalization norm) {
  if (!x_star.same_shape(detail)) throw DimensionError("detail shape differs from the prediction");
  ImageTensor r = x_star - mtf_blur(x_star, spec, BlurTarget::kMultispectral);
  r -= detail;
  const double s = scale_for(r.size(), norm);
  LossTerm t;
  t.value = s * sum_sq(r);
  ImageTensor g = r - adjoint_mtf_blur(r, spec, BlurTarget::kMultispectral);
  t.grad = std::move(g) * (2.0 * s);
  return t;
}

double weighted_total(double l_pr, double l_spe, double l_phy, const AdaptationConfig& cfg) {
  return cfg.lambda_pr * l_pr + cfg.lambda_spe * l_spe + cfg.lambda_phy * l_phy;
}

LossBreakdown total_loss(const ImageTensor& x_star, const ImageTensor& x_ref, const ImageTensor& y,
                         const ImageTensor& detail, const SensorSpec& spec, const AdaptationConfig& cfg,
                         LossNormalization norm) {
  LossBreakdown out;
  out.grad_x_star = ImageTensor(x_star.height(), x_star.width(), x_star.bands());
  auto accumulate = [&](double lambda, const LossTerm& t) {
    if (lambda == 0.0) return;
    for (std::size_t i = 0; i < t.grad.size(); ++i) out.grad_x_star.data()[i] += lambda * t.grad.data()[i];
  };
  if (cfg.lambda_pr > 0.0 || !x_ref.empty()) {
    const LossTerm t = loss_pr(x_star, x_ref, norm);
    out.l_pr = t.value;
    accumulate(cfg.lambda_pr, t);
  }
  if (cfg.lambda_spe > 0.0 || !y.empty()) {
    const LossTerm t = loss_spe(x_star, y, spec, norm);
    out.l_spe = t.value;
    accumulate(cfg.lambda_spe, t);
  }
  if (cfg.lambda_phy > 0.0 || !detail.empty()) {
    const LossTerm t = loss_phy(x_star, detail, spec, norm);
    out.l_phy = t.value;
    accumulate(cfg.lambda_phy, t);
  }
  out.l_total = weighted_total(out.l_pr, out.l_spe, out.l_phy, cfg);
  return out;
}

}  // namespace fmgpan
