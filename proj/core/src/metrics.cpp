#include "fmgpan/metrics.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <vector>

#include "fmgpan/error.hpp"

namespace fmgpan {

namespace {

void check_blocks(const ImageTensor& a, std::size_t block) {
  if (block == 0) throw ConfigError("block size must be positive");
  if (block > a.height() || block > a.width()) {
    throw DimensionError("block of " + std::to_string(block) + " exceeds image " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()));
  }
}

std::vector<double> gather_block(std::span<const double> plane, std::size_t w, std::size_t r0, std::size_t c0,
                                 std::size_t block) {
  std::vector<double> out;
  out.reserve(block * block);
  for (std::size_t r = 0; r < block; ++r) {
    const double* row = plane.data() + (r0 + r) * w + c0;
    out.insert(out.end(), row, row + block);
  }
  return out;
}

bool is_constant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void conjugate(std::span<double> x) {
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = -x[i];
}

}  // namespace

double q_block(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("Q blocks must be non-empty and equally sized");
  const double n = static_cast<double>(a.size());
  if (is_constant(a) && is_constant(b) && a[0] == b[0]) return 1.0;
  const double ma = mean(a), mb = mean(b);
  double va = 0.0, vb = 0.0, cab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    va += da * da;
    vb += db * db;
    cab += da * db;
  }
  va /= n;
  vb /= n;
  cab /= n;
  return 4.0 * cab * ma * mb / ((va + vb + kQStabilizer) * (ma * ma + mb * mb + kQStabilizer));
}

ImageTensor q_map(const ImageTensor& a, const ImageTensor& b, std::size_t block) {
  if (a.bands() != 1 || b.bands() != 1) throw DimensionError("q_index expects single-band images");
  if (!a.same_grid(b)) throw DimensionError("q_index operands differ in size");
  check_blocks(a, block);
  const std::size_t by = a.height() / block, bx = a.width() / block;
  ImageTensor out(by, bx, 1);
  for (std::size_t i = 0; i < by; ++i)
    for (std::size_t j = 0; j < bx; ++j)
      out.at(0, i, j) = q_block(gather_block(a.band(0), a.width(), i * block, j * block, block),
                                gather_block(b.band(0), b.width(), i * block, j * block, block));
  return out;
}

double q_index(const ImageTensor& a, const ImageTensor& b, std::size_t block) {
  const ImageTensor m = q_map(a, b, block);
  return mean(m.data());
}

void cayley_dickson_multiply(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  const std::size_t n = x.size();
  if (y.size() != n || out.size() != n) throw DimensionError("hypercomplex operands differ in dimension");
  if (n == 1) {
    out[0] = x[0] * y[0];
    return;
  }
  // (a, b)(c, d) = (ac - conj(d) b, d a + b conj(c))
  const std::size_t h = n / 2;
  const auto a = x.first(h), b = x.subspan(h);
  const auto c = y.first(h), d = y.subspan(h);
  std::vector<double> conj_c(c.begin(), c.end()), conj_d(d.begin(), d.end()), t1(h), t2(h);
  conjugate(conj_c);
  conjugate(conj_d);
  cayley_dickson_multiply(a, c, t1);
  cayley_dickson_multiply(conj_d, b, t2);
  for (std::size_t i = 0; i < h; ++i) out[i] = t1[i] - t2[i];
  cayley_dickson_multiply(d, a, t1);
  cayley_dickson_multiply(b, conj_c, t2);
  for (std::size_t i = 0; i < h; ++i) out[h + i] = t1[i] + t2[i];
}

double q2n(const ImageTensor& a, const ImageTensor& b, std::size_t block) {
  if (!a.same_shape(b)) throw DimensionError("Q2n operands differ in shape");
  check_blocks(a, block);
  const std::size_t c = a.bands();
  const std::size_t dim = next_pow2(c);
  const std::size_t by = a.height() / block, bx = a.width() / block;
  const std::size_t n = block * block;
  const double nd = static_cast<double>(n);

  std::vector<double> za(n * dim), zb(n * dim);  // pixel-major hypercomplex samples
  std::vector<double> prod(dim), conj_b(dim), cov(dim);
  double total = 0.0;
  for (std::size_t i = 0; i < by; ++i) {
    for (std::size_t j = 0; j < bx; ++j) {
      std::fill(za.begin(), za.end(), 0.0);
      std::fill(zb.begin(), zb.end(), 0.0);
      bool constant = true;
      for (std::size_t k = 0; k < c; ++k) {
        const auto ba = gather_block(a.band(k), a.width(), i * block, j * block, block);
        const auto bb = gather_block(b.band(k), b.width(), i * block, j * block, block);
        constant = constant && is_constant(ba) && is_constant(bb) && ba[0] == bb[0];
        for (std::size_t p = 0; p < n; ++p) {
          za[p * dim + k] = ba[p];
          zb[p * dim + k] = bb[p];
        }
      }
      if (constant) {
        total += 1.0;
        continue;
      }
      std::vector<double> ma(dim, 0.0), mb(dim, 0.0);
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t k = 0; k < dim; ++k) {
          ma[k] += za[p * dim + k];
          mb[k] += zb[p * dim + k];
        }
      for (std::size_t k = 0; k < dim; ++k) {
        ma[k] /= nd;
        mb[k] /= nd;
      }
      double va = 0.0, vb = 0.0, mod_ma = 0.0, mod_mb = 0.0;
      std::fill(cov.begin(), cov.end(), 0.0);
      std::vector<double> da(dim);
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t k = 0; k < dim; ++k) {
          da[k] = za[p * dim + k] - ma[k];
          conj_b[k] = zb[p * dim + k] - mb[k];
          va += da[k] * da[k];
          vb += conj_b[k] * conj_b[k];
        }
        conjugate(conj_b);
        cayley_dickson_multiply(da, conj_b, prod);
        for (std::size_t k = 0; k < dim; ++k) cov[k] += prod[k];
      }
      double mod_cov = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        mod_cov += (cov[k] / nd) * (cov[k] / nd);
        mod_ma += ma[k] * ma[k];
        mod_mb += mb[k] * mb[k];
      }
      va /= nd;
      vb /= nd;
      total += 4.0 * std::sqrt(mod_cov) * std::sqrt(mod_ma) * std::sqrt(mod_mb) /
               ((va + vb + kQStabilizer) * (mod_ma + mod_mb + kQStabilizer));
    }
  }
  return total / static_cast<double>(by * bx);
}

double d_lambda_khan(const ImageTensor& fused, const ImageTensor& y, const SensorSpec& spec, std::size_t block) {
  const ImageTensor low = degrade(fused, spec, BlurTarget::kMultispectral);
  if (!low.same_shape(y)) throw DimensionError("degraded fusion does not match the LRMS shape");
  return std::clamp(1.0 - q2n(low, y, block), 0.0, 1.0);
}

namespace {

struct SpatialTerms {
  std::vector<ImageTensor> q_high;  // per band, per-block Q(fused_b, P)
  std::vector<double> q_low;        // per band, Q(y_b, P_lr)
};

SpatialTerms spatial_terms(const ImageTensor& fused, const ImageTensor& y, const ImageTensor& pan,
                           const SensorSpec& spec, std::size_t block) {
  if (pan.bands() != 1) throw DimensionError("PAN must have a single band");
  if (!fused.same_grid(pan)) throw DimensionError("fused image and PAN grids differ");
  if (fused.bands() != y.bands()) throw DimensionError("fused image and LRMS band counts differ");
  const ImageTensor pan_lr = degrade(pan, spec, BlurTarget::kPan);
  if (!pan_lr.same_grid(y)) throw DimensionError("degraded PAN does not match the LRMS grid");
  SpatialTerms t;
  for (std::size_t b = 0; b < fused.bands(); ++b) {
    t.q_high.push_back(q_map(fused.extract_band(b), pan, block));
    t.q_low.push_back(q_index(y.extract_band(b), pan_lr, block));
  }
  return t;
}

double d_s_from(const SpatialTerms& t) {
  double s = 0.0;
  for (std::size_t b = 0; b < t.q_low.size(); ++b) s += std::abs(mean(t.q_high[b].data()) - t.q_low[b]);
  return s / static_cast<double>(t.q_low.size());
}

}  // namespace

double d_s(const ImageTensor& fused, const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
           std::size_t block) {
  return std::clamp(d_s_from(spatial_terms(fused, y, pan, spec, block)), 0.0, 1.0);
}

double hqnr_from(double d_lambda, double d_s) { return (1.0 - d_lambda) * (1.0 - d_s); }

QualityReport hqnr(const ImageTensor& fused, const ImageTensor& y, const ImageTensor& pan, const SensorSpec& spec,
                   std::size_t block) {
  const double dl = d_lambda_khan(fused, y, spec, block);
  const SpatialTerms t = spatial_terms(fused, y, pan, spec, block);
  const double ds = std::clamp(d_s_from(t), 0.0, 1.0);

  QualityReport rep;
  rep.mode = ReportMode::kFullRes;
  rep.block_size = block;
  rep.scalars["d_lambda"] = dl;
  rep.scalars["d_s"] = ds;
  rep.scalars["hqnr"] = hqnr_from(dl, ds);

  // Local spatial distortion: per-block signed contributions whose mean is
  // D_s, so the map averages to the scalar HQNR.
  const ImageTensor& shape = t.q_high.front();
  ImageTensor map(shape.height(), shape.width(), 1);
  const std::size_t c = t.q_low.size();
  for (std::size_t b = 0; b < c; ++b) {
    const double sign = mean(t.q_high[b].data()) >= t.q_low[b] ? 1.0 : -1.0;
    for (std::size_t k = 0; k < map.size(); ++k)
      map.data()[k] += sign * (t.q_high[b].data()[k] - t.q_low[b]) / static_cast<double>(c);
  }
  for (double& v : map.data()) v = (1.0 - dl) * (1.0 - v);
  rep.block_map = std::move(map);

  rep.config["block_size"] = std::to_string(block);
  rep.config["stride"] = std::to_string(block);
  rep.config["exponent_q"] = "1";
  rep.config["q_stabilizer"] = "1e-16";
  rep.config["d_lambda"] = "khan: 1 - Q2n(degrade(fused), lrms)";
  rep.config["conventions"] = "block size, stride and exponent are assumed toolbox defaults";
  rep.config["sensor"] = spec.name;
  return rep;
}

double sam_degrees(const ImageTensor& fused, const ImageTensor& truth, std::size_t* skipped) {
  if (!fused.same_shape(truth)) throw DimensionError("SAM operands differ in shape");
  const std::size_t n = fused.plane_size();
  double sum = 0.0;
  std::size_t used = 0, skip = 0;
  for (std::size_t p = 0; p < n; ++p) {
    double d = 0.0, nf = 0.0, nt = 0.0;
    for (std::size_t b = 0; b < fused.bands(); ++b) {
      const double f = fused.band(b)[p], t = truth.band(b)[p];
      d += f * t;
      nf += f * f;
      nt += t * t;
    }
    if (nf == 0.0 || nt == 0.0) {
      ++skip;
      continue;
    }
    sum += std::acos(std::clamp(d / std::sqrt(nf * nt), -1.0, 1.0));
    ++used;
  }
  if (skipped) *skipped = skip;
  if (used == 0) return 0.0;
  return sum / static_cast<double>(used) * 180.0 / std::numbers::pi;
}

double ergas(const ImageTensor& fused, const ImageTensor& truth, std::size_t ratio) {
  if (!fused.same_shape(truth)) throw DimensionError("ERGAS operands differ in shape");
  double acc = 0.0;
  for (std::size_t b = 0; b < fused.bands(); ++b) {
    const auto t = truth.band(b);
    const auto f = fused.band(b);
    const double mu = mean(t);
    if (mu == 0.0) throw DegeneracyError("ground-truth band " + std::to_string(b) + " has zero mean");
    double mse = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mse += (f[i] - t[i]) * (f[i] - t[i]);
    mse /= static_cast<double>(t.size());
    acc += mse / (mu * mu);
  }
  return 100.0 / static_cast<double>(ratio) * std::sqrt(acc / static_cast<double>(fused.bands()));
}

double scc(const ImageTensor& fused, const ImageTensor& truth) {
  if (!fused.same_shape(truth)) throw DimensionError("SCC operands differ in shape");
  const KernelSpec lap = KernelSpec::from_weights(3, {0, -1, 0, -1, 4, -1, 0, -1, 0});
  const ImageTensor hf = conv2d_same(fused, lap);
  const ImageTensor ht = conv2d_same(truth, lap);
  double total = 0.0;
  for (std::size_t b = 0; b < fused.bands(); ++b) {
    const auto x = hf.band(b), y = ht.band(b);
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    double r = 0.0;
    if (sxx > 0.0 && syy > 0.0) {
      r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    } else if (sxx == 0.0 && syy == 0.0) {
      r = 1.0;  // both flat after high-pass filtering
    }
    total += r;
  }
  return total / static_cast<double>(fused.bands());
}

QualityReport reduced_metrics(const ImageTensor& fused, const ImageTensor& truth, std::size_t ratio,
                              std::size_t block) {
  if (!fused.same_shape(truth)) throw DimensionError("fused image and ground truth differ in shape");
  for (std::size_t b = 0; b < truth.bands(); ++b) {
    const auto t = truth.band(b);
    if (std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; })) {
      throw DegeneracyError("ground-truth band " + std::to_string(b) + " is all zero");
    }
  }
  QualityReport rep;
  rep.mode = ReportMode::kReducedRes;
  rep.block_size = block;
  std::size_t skipped = 0;
  rep.scalars["sam"] = sam_degrees(fused, truth, &skipped);
  rep.scalars["sam_skipped_pixels"] = static_cast<double>(skipped);
  rep.scalars["ergas"] = ergas(fused, truth, ratio);
  rep.scalars["scc"] = scc(fused, truth);
  rep.scalars["q2n"] = std::clamp(q2n(fused, truth, block), 0.0, 1.0);
  rep.config["ratio"] = std::to_string(ratio);
  rep.config["block_size"] = std::to_string(block);
  rep.config["scc_filter"] = "laplacian [[0,-1,0],[-1,4,-1],[0,-1,0]]";
  return rep;
}

void write_report_json(const std::filesystem::path& path, const QualityReport& report) {
  nlohmann::json j;
  j["mode"] = report.mode == ReportMode::kFullRes ? "full-res" : "reduced-res";
  j["scalars"] = report.scalars;
  j["block_size"] = report.block_size;
  j["config"] = report.config;
  if (report.block_map) {
    const ImageTensor& m = *report.block_map;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.height(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < m.width(); ++c) row.push_back(m.at(0, r, c));
      rows.push_back(row);
    }
    j["block_map"] = rows;
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void write_heatmap_png(const std::filesystem::path& path, const QualityReport& report) {
  if (!report.block_map) throw ConfigError("report has no block map to render");
  const ImageTensor& m = *report.block_map;
  const std::size_t bs = report.block_size;
  const std::size_t h = m.height() * bs, w = m.width() * bs;
  std::vector<png_byte> pixels(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double v = std::clamp(m.at(0, y / bs, x / bs), 0.0, 1.0);
      pixels[y * w + x] = static_cast<png_byte>(std::lround(v * 255.0));
    }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    throw IoError("failed to write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace fmgpan
