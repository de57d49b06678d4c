#include "fmgpan/adaptive_net.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "fmgpan/error.hpp"

namespace fmgpan {

Variant parse_variant(const std::string& s) {
  if (s == "default") return Variant::kDefault;
  if (s == "light" || s == "lightweight") return Variant::kLightweight;
  throw ConfigError("unknown network variant '" + s + "' (expected default|light)");
}

std::string to_string(Variant v) { return v == Variant::kDefault ? "default" : "light"; }

ConvLayer ConvLayer::zeros_like() const {
  ConvLayer z = *this;
  std::fill(z.weight.begin(), z.weight.end(), 0.0);
  std::fill(z.bias.begin(), z.bias.end(), 0.0);
  return z;
}

void AdaptationConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (lambda_pr < 0.0 || lambda_spe < 0.0 || lambda_phy < 0.0) throw ConfigError("loss weights must be nonnegative");
}

std::size_t NetworkParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.parameter_count();
  return n;
}

void NetworkParams::reset_optimizer() {
  adam_m.clear();
  adam_v.clear();
  for (const auto& l : layers) {
    adam_m.push_back(l.zeros_like());
    adam_v.push_back(l.zeros_like());
  }
  step_count = 0;
}

std::size_t default_hidden_width(Variant v, std::size_t bands) {
  if (v == Variant::kDefault) return 32;
  // 34 hidden channels at 4 bands, 44 at 8 bands.
  return std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(24.0 + 2.5 * static_cast<double>(bands))));
}

namespace {

ConvLayer make_layer(LayerKind kind, std::size_t in, std::size_t out, std::size_t k) {
  ConvLayer l;
  l.kind = kind;
  l.in = in;
  l.out = out;
  l.k = k;
  l.weight.assign(l.weight_count(), 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

void append_block(std::vector<ConvLayer>& layers, Variant v, std::size_t in, std::size_t out) {
  if (v == Variant::kDefault) {
    layers.push_back(make_layer(LayerKind::kConv, in, out, 3));
  } else {
    layers.push_back(make_layer(LayerKind::kDepthwise, in, in, 3));
    layers.push_back(make_layer(LayerKind::kPointwise, in, out, 1));
  }
}

}  // namespace

NetworkParams make_network(Variant v, std::size_t bands, std::size_t width) {
  if (bands == 0) throw ConfigError("network needs at least one band");
  NetworkParams p;
  p.variant = v;
  p.bands = bands;
  p.width = width == 0 ? default_hidden_width(v, bands) : width;
  append_block(p.layers, v, bands, p.width);
  append_block(p.layers, v, p.width, p.width);
  append_block(p.layers, v, p.width, p.width);
  append_block(p.layers, v, p.width, bands);
  p.reset_optimizer();
  return p;
}

NetworkParams init_params(Variant v, std::size_t bands, std::uint64_t seed, std::size_t width) {
  NetworkParams p = make_network(v, bands, width);
  std::mt19937_64 gen(seed);
  // 53 random bits -> [0, 1); avoids implementation-defined distributions.
  auto uniform = [&gen](double bound) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * bound;
  };
  for (auto& l : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in()));
    for (auto& w : l.weight) w = uniform(bound);
    for (auto& b : l.bias) b = uniform(bound);
  }
  return p;
}

ImageTensor build_input(const ImageTensor& pan, const ImageTensor& yhat) {
  if (pan.bands() != 1) throw DimensionError("PAN must have a single band");
  if (!pan.same_grid(yhat)) throw DimensionError("PAN and upsampled MS grids differ");
  ImageTensor delta = pan.replicate(yhat.bands());
  delta -= yhat;
  return delta;
}

// ---------------------------------------------------------------------------
// Layer kernels

namespace {

using ConstMap = Eigen::Map<const Feature>;

constexpr std::size_t kTileBudget = std::size_t{1} << 21;  // doubles per im2col tile

std::size_t tile_rows(std::size_t col_rows, std::size_t h, std::size_t w) {
  return std::clamp<std::size_t>(kTileBudget / std::max<std::size_t>(1, col_rows * w), 1, h);
}

// col(ci*9 + ky*3 + kx, (y - y0)*w + x) = in(ci, y + ky - 1, x + kx - 1), zero outside.
void im2col3(const Feature& in, std::size_t h, std::size_t w, std::size_t y0, std::size_t rows, Feature& col) {
  const std::size_t cin = static_cast<std::size_t>(in.rows());
  for (std::size_t ci = 0; ci < cin; ++ci) {
    const double* src = in.row(static_cast<Eigen::Index>(ci)).data();
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* dst = col.row(static_cast<Eigen::Index>(ci * 9 + ky * 3 + kx)).data();
        for (std::size_t ty = 0; ty < rows; ++ty) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y0 + ty + ky) - 1;
          double* d = dst + ty * w;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(d, d + w, 0.0);
            continue;
          }
          const double* s = src + static_cast<std::size_t>(sy) * w;
          if (kx == 0) {
            d[0] = 0.0;
            std::copy(s, s + w - 1, d + 1);
          } else if (kx == 1) {
            std::copy(s, s + w, d);
          } else {
            std::copy(s + 1, s + w, d);
            d[w - 1] = 0.0;
          }
        }
      }
    }
  }
}

// Inverse scatter of im2col3: accumulates col into gin.
void col2im3(const Feature& col, std::size_t h, std::size_t w, std::size_t y0, std::size_t rows, Feature& gin) {
  const std::size_t cin = static_cast<std::size_t>(gin.rows());
  for (std::size_t ci = 0; ci < cin; ++ci) {
    double* dst = gin.row(static_cast<Eigen::Index>(ci)).data();
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* src = col.row(static_cast<Eigen::Index>(ci * 9 + ky * 3 + kx)).data();
        for (std::size_t ty = 0; ty < rows; ++ty) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y0 + ty + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* s = src + ty * w;
          double* d = dst + static_cast<std::size_t>(sy) * w;
          if (kx == 0) {
            for (std::size_t x = 1; x < w; ++x) d[x - 1] += s[x];
          } else if (kx == 1) {
            for (std::size_t x = 0; x < w; ++x) d[x] += s[x];
          } else {
            for (std::size_t x = 0; x + 1 < w; ++x) d[x + 1] += s[x];
          }
        }
      }
    }
  }
}

void add_bias(Feature& out, const std::vector<double>& bias) {
  for (Eigen::Index c = 0; c < out.rows(); ++c) out.row(c).array() += bias[static_cast<std::size_t>(c)];
}

void conv3_forward(const ConvLayer& l, const Feature& in, std::size_t h, std::size_t w, Feature& out) {
  const auto cols = static_cast<Eigen::Index>(l.in * 9);
  ConstMap wm(l.weight.data(), static_cast<Eigen::Index>(l.out), cols);
  out.resize(static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(h * w));
  const std::size_t t = tile_rows(l.in * 9, h, w);
  Feature col(cols, static_cast<Eigen::Index>(t * w));
  for (std::size_t y0 = 0; y0 < h; y0 += t) {
    const std::size_t rows = std::min(t, h - y0);
    const auto n = static_cast<Eigen::Index>(rows * w);
    im2col3(in, h, w, y0, rows, col);
    out.middleCols(static_cast<Eigen::Index>(y0 * w), n).noalias() = wm * col.leftCols(n);
  }
  add_bias(out, l.bias);
}

void conv3_backward(const ConvLayer& l, const Feature& in, const Feature& gout, std::size_t h, std::size_t w,
                    ConvLayer& grad, Feature* gin) {
  const auto cols = static_cast<Eigen::Index>(l.in * 9);
  ConstMap wm(l.weight.data(), static_cast<Eigen::Index>(l.out), cols);
  Eigen::Map<Feature> gw(grad.weight.data(), static_cast<Eigen::Index>(l.out), cols);
  if (gin) gin->setZero(static_cast<Eigen::Index>(l.in), static_cast<Eigen::Index>(h * w));
  const std::size_t t = tile_rows(l.in * 9, h, w);
  Feature col(cols, static_cast<Eigen::Index>(t * w));
  Feature gcol;
  for (std::size_t y0 = 0; y0 < h; y0 += t) {
    const std::size_t rows = std::min(t, h - y0);
    const auto n = static_cast<Eigen::Index>(rows * w);
    const auto g = gout.middleCols(static_cast<Eigen::Index>(y0 * w), n);
    im2col3(in, h, w, y0, rows, col);
    gw.noalias() += g * col.leftCols(n).transpose();
    if (gin) {
      gcol.noalias() = wm.transpose() * g;
      col2im3(gcol, h, w, y0, rows, *gin);
    }
  }
  for (std::size_t c = 0; c < l.out; ++c) grad.bias[c] += gout.row(static_cast<Eigen::Index>(c)).sum();
}

void depthwise_forward(const ConvLayer& l, const Feature& in, std::size_t h, std::size_t w, Feature& out) {
  out.resize(static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(h * w));
  for (std::size_t c = 0; c < l.out; ++c) {
    const double* src = in.row(static_cast<Eigen::Index>(c)).data();
    double* dst = out.row(static_cast<Eigen::Index>(c)).data();
    const double* k = l.weight.data() + c * 9;
    std::fill(dst, dst + h * w, l.bias[c]);
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double wk = k[ky * 3 + kx];
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* s = src + static_cast<std::size_t>(sy) * w;
          double* d = dst + y * w;
          const std::size_t x0 = kx == 0 ? 1 : 0;
          const std::size_t x1 = kx == 2 ? w - 1 : w;
          for (std::size_t x = x0; x < x1; ++x) d[x] += wk * s[x + kx - 1];
        }
      }
    }
  }
}

void depthwise_backward(const ConvLayer& l, const Feature& in, const Feature& gout, std::size_t h, std::size_t w,
                        ConvLayer& grad, Feature* gin) {
  if (gin) gin->setZero(static_cast<Eigen::Index>(l.in), static_cast<Eigen::Index>(h * w));
  for (std::size_t c = 0; c < l.out; ++c) {
    const double* src = in.row(static_cast<Eigen::Index>(c)).data();
    const double* g = gout.row(static_cast<Eigen::Index>(c)).data();
    double* gi = gin ? gin->row(static_cast<Eigen::Index>(c)).data() : nullptr;
    const double* k = l.weight.data() + c * 9;
    double* gk = grad.weight.data() + c * 9;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double wk = k[ky * 3 + kx];
        double acc = 0.0;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          const double* s = src + static_cast<std::size_t>(sy) * w;
          const double* gy = g + y * w;
          const std::size_t x0 = kx == 0 ? 1 : 0;
          const std::size_t x1 = kx == 2 ? w - 1 : w;
          for (std::size_t x = x0; x < x1; ++x) acc += gy[x] * s[x + kx - 1];
          if (gi) {
            double* d = gi + static_cast<std::size_t>(sy) * w;
            for (std::size_t x = x0; x < x1; ++x) d[x + kx - 1] += wk * gy[x];
          }
        }
        gk[ky * 3 + kx] += acc;
      }
    }
    double bsum = 0.0;
    for (std::size_t p = 0; p < h * w; ++p) bsum += g[p];
    grad.bias[c] += bsum;
  }
}

void pointwise_forward(const ConvLayer& l, const Feature& in, Feature& out) {
  ConstMap wm(l.weight.data(), static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
  out.noalias() = wm * in;
  add_bias(out, l.bias);
}

void pointwise_backward(const ConvLayer& l, const Feature& in, const Feature& gout, ConvLayer& grad, Feature* gin) {
  ConstMap wm(l.weight.data(), static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
  Eigen::Map<Feature> gw(grad.weight.data(), static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
  gw.noalias() += gout * in.transpose();
  for (std::size_t c = 0; c < l.out; ++c) grad.bias[c] += gout.row(static_cast<Eigen::Index>(c)).sum();
  if (gin) gin->noalias() = wm.transpose() * gout;
}

void layer_forward(const ConvLayer& l, const Feature& in, std::size_t h, std::size_t w, Feature& out) {
  switch (l.kind) {
    case LayerKind::kConv: conv3_forward(l, in, h, w, out); break;
    case LayerKind::kDepthwise: depthwise_forward(l, in, h, w, out); break;
    case LayerKind::kPointwise: pointwise_forward(l, in, out); break;
  }
}

void layer_backward(const ConvLayer& l, const Feature& in, const Feature& gout, std::size_t h, std::size_t w,
                    ConvLayer& grad, Feature* gin) {
  switch (l.kind) {
    case LayerKind::kConv: conv3_backward(l, in, gout, h, w, grad, gin); break;
    case LayerKind::kDepthwise: depthwise_backward(l, in, gout, h, w, grad, gin); break;
    case LayerKind::kPointwise: pointwise_backward(l, in, gout, grad, gin); break;
  }
}

void relu_inplace(Feature& f) { f = f.cwiseMax(0.0); }

// dL/d(pre-activation) from dL/d(activation) and the post-ReLU activation.
void relu_backward(Feature& g, const Feature& act) { g = (act.array() > 0.0).select(g, 0.0); }

Feature to_feature(const ImageTensor& img) {
  return ConstMap(img.data().data(), static_cast<Eigen::Index>(img.bands()), static_cast<Eigen::Index>(img.plane_size()));
}

void check_inputs(const NetworkParams& p, const ImageTensor& delta, const ImageTensor& yhat) {
  if (delta.bands() != p.bands) {
    throw DimensionError("network expects " + std::to_string(p.bands) + " bands, input has " +
                         std::to_string(delta.bands()));
  }
  if (!delta.same_shape(yhat)) throw DimensionError("delta and upsampled MS shapes differ");
  if (p.layers.size() != 4 * p.layers_per_block()) throw ContractError("network layer table is malformed");
}

// Runs block `b`, optionally recording each layer's input.
Feature run_block(const NetworkParams& p, std::size_t b, const Feature& in, std::size_t h, std::size_t w,
                  std::vector<Feature>* inputs) {
  const std::size_t lpb = p.layers_per_block();
  Feature cur = in;
  for (std::size_t i = 0; i < lpb; ++i) {
    if (inputs) inputs->push_back(cur);
    Feature next;
    layer_forward(p.layers[b * lpb + i], cur, h, w, next);
    cur = std::move(next);
  }
  return cur;
}

// Backpropagates through block `b`; returns dL/d(block input) if requested.
void backprop_block(const NetworkParams& p, std::size_t b, const ForwardCache& cache, Feature g, std::size_t h,
                    std::size_t w, Gradients& grads, Feature* gin) {
  const std::size_t lpb = p.layers_per_block();
  for (std::size_t i = lpb; i-- > 0;) {
    const std::size_t li = b * lpb + i;
    const bool need_input_grad = gin != nullptr || i > 0;
    Feature gprev;
    layer_backward(p.layers[li], cache.layer_inputs[li], g, h, w, grads.layers[li],
                   need_input_grad ? &gprev : nullptr);
    if (i == 0) {
      if (gin) *gin = std::move(gprev);
    } else {
      g = std::move(gprev);
    }
  }
}

ImageTensor assemble_output(const Feature& out, const ImageTensor& yhat) {
  ImageTensor x = yhat;
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += out.data()[i];
  return x;
}

}  // namespace

ForwardResult forward(const NetworkParams& params, const ImageTensor& delta, const ImageTensor& yhat) {
  check_inputs(params, delta, yhat);
  const std::size_t h = delta.height(), w = delta.width();
  ForwardResult res;
  ForwardCache& cache = res.cache;
  cache.generation = params.generation;
  cache.owner = &params;
  cache.height = h;
  cache.width = w;

  const Feature in = to_feature(delta);
  cache.a0 = run_block(params, 0, in, h, w, &cache.layer_inputs);
  relu_inplace(cache.a0);
  cache.a1 = run_block(params, 1, cache.a0, h, w, &cache.layer_inputs);
  relu_inplace(cache.a1);
  cache.a2 = run_block(params, 2, cache.a1, h, w, &cache.layer_inputs);
  cache.a2 += cache.a0;
  relu_inplace(cache.a2);
  const Feature out = run_block(params, 3, cache.a2, h, w, &cache.layer_inputs);
  res.x_star = assemble_output(out, yhat);
  return res;
}

ImageTensor infer(const NetworkParams& params, const ImageTensor& delta, const ImageTensor& yhat) {
  check_inputs(params, delta, yhat);
  const std::size_t h = delta.height(), w = delta.width();
  Feature a0 = run_block(params, 0, to_feature(delta), h, w, nullptr);
  relu_inplace(a0);
  Feature a1 = run_block(params, 1, a0, h, w, nullptr);
  relu_inplace(a1);
  Feature a2 = run_block(params, 2, a1, h, w, nullptr);
  a2 += a0;
  relu_inplace(a2);
  return assemble_output(run_block(params, 3, a2, h, w, nullptr), yhat);
}

Gradients backward(const NetworkParams& params, const ForwardCache& cache, const ImageTensor& grad_x_star) {
  if (cache.owner != &params || cache.generation != params.generation ||
      cache.layer_inputs.size() != params.layers.size()) {
    throw ContractError("activation cache is stale or belongs to another network");
  }
  if (grad_x_star.bands() != params.bands || grad_x_star.height() != cache.height ||
      grad_x_star.width() != cache.width) {
    throw DimensionError("gradient shape does not match the cached forward pass");
  }
  const std::size_t h = cache.height, w = cache.width;
  Gradients grads;
  for (const auto& l : params.layers) grads.layers.push_back(l.zeros_like());

  Feature g_a2;
  backprop_block(params, 3, cache, to_feature(grad_x_star), h, w, grads, &g_a2);
  relu_backward(g_a2, cache.a2);  // gradient w.r.t. B2(a1) + a0

  Feature g_a1;
  backprop_block(params, 2, cache, g_a2, h, w, grads, &g_a1);
  relu_backward(g_a1, cache.a1);

  Feature g_a0;
  backprop_block(params, 1, cache, g_a1, h, w, grads, &g_a0);
  g_a0 += g_a2;  // skip connection
  relu_backward(g_a0, cache.a0);

  backprop_block(params, 0, cache, g_a0, h, w, grads, nullptr);
  return grads;
}

void adam_step(NetworkParams& params, const Gradients& grads, const AdaptationConfig& cfg) {
  if (grads.layers.size() != params.layers.size()) throw DimensionError("gradient layer count mismatch");
  if (params.adam_m.size() != params.layers.size() || params.adam_v.size() != params.layers.size()) {
    params.reset_optimizer();
  }
  ++params.step_count;
  const double t = static_cast<double>(params.step_count);
  const double c1 = 1.0 - std::pow(kAdamBeta1, t);
  const double c2 = 1.0 - std::pow(kAdamBeta2, t);
  auto update = [&](std::vector<double>& theta, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    if (g.size() != theta.size()) throw DimensionError("gradient shape mismatch");
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      theta[i] -= cfg.lr * mhat / (std::sqrt(vhat) + kAdamEps);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight, grads.layers[l].weight, params.adam_m[l].weight, params.adam_v[l].weight);
    update(params.layers[l].bias, grads.layers[l].bias, params.adam_m[l].bias, params.adam_v[l].bias);
  }
  ++params.generation;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

static_assert(std::endian::native == std::endian::little, "FMGP I/O assumes a little-endian host");

constexpr std::uint8_t kParamVersion = 1;
constexpr std::uint8_t kParamF32 = 1;
constexpr std::uint8_t kParamF64 = 2;

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated parameter file " + path.string());
  return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const NetworkParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write("FMGP", 4);
  put<std::uint8_t>(os, kParamVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(params.variant));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.bands));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.width));
  put<std::uint8_t>(os, kParamF64);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    put<std::uint8_t>(os, static_cast<std::uint8_t>(l.kind));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.in));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.out));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(l.k));
  }
  for (const auto& l : params.layers) {
    os.write(reinterpret_cast<const char*>(l.weight.data()), static_cast<std::streamsize>(l.weight.size() * 8));
    os.write(reinterpret_cast<const char*>(l.bias.data()), static_cast<std::streamsize>(l.bias.size() * 8));
  }
  if (!os) throw IoError("write failed for " + path.string());
}

NetworkParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::memcmp(magic.data(), "FMGP", 4) != 0) {
    throw FormatError(path.string() + " is not an FMGP parameter file");
  }
  if (get<std::uint8_t>(is, path) != kParamVersion) throw FormatError("unsupported FMGP version");
  const auto variant_id = get<std::uint8_t>(is, path);
  if (variant_id > 1) throw FormatError("unknown network variant id " + std::to_string(variant_id));
  const auto bands = get<std::uint32_t>(is, path);
  const auto width = get<std::uint32_t>(is, path);
  const auto dtype = get<std::uint8_t>(is, path);
  if (dtype != kParamF32 && dtype != kParamF64) throw FormatError("unsupported FMGP dtype");
  const auto count = get<std::uint32_t>(is, path);

  NetworkParams p = make_network(static_cast<Variant>(variant_id), bands, width);
  if (count != p.layers.size()) throw FormatError("layer count does not match the declared topology");
  for (auto& l : p.layers) {
    const auto kind = get<std::uint8_t>(is, path);
    const auto in = get<std::uint32_t>(is, path);
    const auto out = get<std::uint32_t>(is, path);
    const auto k = get<std::uint32_t>(is, path);
    if (kind != static_cast<std::uint8_t>(l.kind) || in != l.in || out != l.out || k != l.k) {
      throw FormatError("layer shape table does not match the declared topology");
    }
  }
  auto read_values = [&](std::vector<double>& dst) {
    if (dtype == kParamF64) {
      if (!is.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size() * 8)))
        throw FormatError("truncated parameter payload");
    } else {
      std::vector<float> tmp(dst.size());
      if (!is.read(reinterpret_cast<char*>(tmp.data()), static_cast<std::streamsize>(tmp.size() * 4)))
        throw FormatError("truncated parameter payload");
      std::copy(tmp.begin(), tmp.end(), dst.begin());
    }
    for (double v : dst)
      if (!std::isfinite(v)) throw FormatError("non-finite parameter value");
  };
  for (auto& l : p.layers) {
    read_values(l.weight);
    read_values(l.bias);
  }
  p.reset_optimizer();
  return p;
}

NetworkParams load_params(const std::filesystem::path& path, Variant variant, std::size_t bands) {
  NetworkParams p = load_params(path);
  if (p.variant != variant) {
    throw FormatError("parameter file holds the " + to_string(p.variant) + " variant, expected " + to_string(variant));
  }
  if (p.bands != bands) {
    throw FormatError("parameter file is for " + std::to_string(p.bands) + " bands, expected " + std::to_string(bands));
  }
  return p;
}

}  // namespace fmgpan
