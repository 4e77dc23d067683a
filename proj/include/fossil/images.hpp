#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fossil/common.hpp"
#include "fossil/dataset.hpp"
#include "fossil/learner.hpp"
#include "fossil/metrics.hpp"
#include "fossil/rng.hpp"
#include "fossil/textio.hpp"

namespace fossil {

struct TinyImage {
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<double> pixels;  // row-major, each in [0,1]
  int label = 0;

  double at(std::size_t r, std::size_t c) const { return pixels[r * w + c]; }
  double& at(std::size_t r, std::size_t c) { return pixels[r * w + c]; }

  void validate() const {
    if (h == 0 || w == 0 || pixels.size() != h * w)
      throw ValidationError("TinyImage: pixel buffer does not match h*w");
    for (double p : pixels)
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw ValidationError("TinyImage: pixel outside [0,1]");
    if (label != 0 && label != 1)
      throw ValidationError("TinyImage: label must be 0 or 1");
  }
};

namespace detail {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Smooth diagonal ramp over roughly [0.30, 0.45].
inline double ramp_background(std::size_t r, std::size_t c, std::size_t size) {
  const double span = static_cast<double>(2 * (size - 1));
  return 0.30 + 0.15 * (static_cast<double>(r + c) / span);
}

}  // namespace detail

// Class 0: soft bright disc at the center. Class 1: soft bright ring around
// the same center. Both sit on the shared ramp background with a 0.85 peak,
// plus per-pixel Gaussian noise. With noise_scale = 0 every image collapses
// to its class template. Deterministic per (seed, image index).
inline std::vector<TinyImage> generate_tiny_images(
    const std::vector<std::size_t>& n_per_class, std::size_t size,
    std::uint64_t seed, double noise_scale = 0.05) {
  if (n_per_class.size() != 2)
    throw ConfigError("generate_tiny_images: need counts for exactly 2 classes");
  if (n_per_class[0] == 0 || n_per_class[1] == 0)
    throw ConfigError("generate_tiny_images: counts must be >= 1");
  if (size < 8)
    throw ConfigError("generate_tiny_images: size must be at least 8");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
    throw ConfigError("generate_tiny_images: noise_scale must be >= 0");

  const double center = (static_cast<double>(size) - 1.0) / 2.0;
  const double disc_r = static_cast<double>(size) / 5.0;
  const double ring_r = static_cast<double>(size) / 3.0;
  const double ring_w = static_cast<double>(size) / 12.0;
  const double peak = 0.85;

  std::vector<TinyImage> images;
  std::size_t index = 0;
  for (int label = 0; label < 2; ++label) {
    for (std::size_t k = 0; k < n_per_class[static_cast<std::size_t>(label)];
         ++k, ++index) {
      TinyImage img;
      img.h = size;
      img.w = size;
      img.label = label;
      img.pixels.resize(size * size);
      Rng rng(mix_seed(seed, "img" + std::to_string(index)));
      for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t c = 0; c < size; ++c) {
          const double bg = detail::ramp_background(r, c, size);
          const double dr = static_cast<double>(r) - center;
          const double dc = static_cast<double>(c) - center;
          const double d = std::sqrt(dr * dr + dc * dc);
          double shape;
          if (label == 0) {
            shape = std::exp(-(d * d) / (2.0 * disc_r * disc_r));
          } else {
            const double off = d - ring_r;
            shape = std::exp(-(off * off) / (2.0 * ring_w * ring_w));
          }
          double v = bg + (peak - bg) * shape;
          if (noise_scale > 0.0) v += noise_scale * rng.normal();
          img.at(r, c) = detail::clamp01(v);
        }
      }
      images.push_back(std::move(img));
    }
  }
  return images;
}

// ============================================================
// Perturbations
// ============================================================

enum class PerturbationKind {
  gaussian_blur,
  jpeg_like,
  additive_noise,
  brightness,
  contrast
};

inline std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::gaussian_blur: return "gaussian_blur";
    case PerturbationKind::jpeg_like: return "jpeg_like";
    case PerturbationKind::additive_noise: return "additive_noise";
    case PerturbationKind::brightness: return "brightness";
    case PerturbationKind::contrast: return "contrast";
  }
  throw ConfigError("unreachable perturbation kind");
}

inline PerturbationKind perturbation_kind_from(const std::string& s) {
  if (s == "gaussian_blur") return PerturbationKind::gaussian_blur;
  if (s == "jpeg_like") return PerturbationKind::jpeg_like;
  if (s == "additive_noise") return PerturbationKind::additive_noise;
  if (s == "brightness") return PerturbationKind::brightness;
  if (s == "contrast") return PerturbationKind::contrast;
  throw ConfigError("unknown perturbation kind '" + s + "'");
}

// Severity 0 is an identity-strength pass (image returned unchanged) used
// to validate the harness end to end; the degradation tables cover 1..3.
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::gaussian_blur;
  int severity = 1;

  void validate() const {
    if (severity < 0 || severity > 3)
      throw ConfigError("perturbation severity must be in {0,1,2,3}, got " +
                        std::to_string(severity));
  }
};

namespace detail {

// Normalized 1-D Gaussian taps with radius ceil(3*sigma).
inline std::vector<double> gaussian_kernel_1d(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ConfigError("gaussian kernel: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) /
                              (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

// Symmetric reflection: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
inline std::size_t reflect_index(long long i, std::size_t n) {
  const long long nn = static_cast<long long>(n);
  while (i < 0 || i >= nn) {
    if (i < 0) i = -1 - i;
    if (i >= nn) i = 2 * nn - 1 - i;
  }
  return static_cast<std::size_t>(i);
}

inline void blur_separable(TinyImage& img, double sigma) {
  const auto kern = gaussian_kernel_1d(sigma);
  const int radius = static_cast<int>(kern.size() / 2);
  std::vector<double> tmp(img.pixels.size());
  for (std::size_t r = 0; r < img.h; ++r)
    for (std::size_t c = 0; c < img.w; ++c) {
      double s = 0.0;
      for (int j = -radius; j <= radius; ++j)
        s += kern[static_cast<std::size_t>(j + radius)] *
             img.at(r, reflect_index(static_cast<long long>(c) + j, img.w));
      tmp[r * img.w + c] = s;
    }
  for (std::size_t r = 0; r < img.h; ++r)
    for (std::size_t c = 0; c < img.w; ++c) {
      double s = 0.0;
      for (int j = -radius; j <= radius; ++j)
        s += kern[static_cast<std::size_t>(j + radius)] *
             tmp[reflect_index(static_cast<long long>(r) + j, img.h) * img.w + c];
      img.at(r, c) = clamp01(s);
    }
}

// Orthonormal DCT-II basis for 4-point blocks: phi[k][n].
inline const std::array<std::array<double, 4>, 4>& dct4_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 4>, 4> b{};
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < 4; ++k) {
      const double alpha = k == 0 ? std::sqrt(0.25) : std::sqrt(0.5);
      for (int n = 0; n < 4; ++n)
        b[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] =
            alpha * std::cos(pi * (2.0 * n + 1.0) * k / 8.0);
    }
    return b;
  }();
  return basis;
}

// 4x4 block transform, quantize every coefficient to step*round(c/step),
// inverse transform. Blocks past the image edge use edge-replicate padding
// and are cropped back.
inline void jpeg_like_quantize(TinyImage& img, double step) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw ConfigError("jpeg_like: step must be > 0");
  const auto& phi = dct4_basis();
  const std::size_t bh = (img.h + 3) / 4, bw = (img.w + 3) / 4;
  for (std::size_t br = 0; br < bh; ++br)
    for (std::size_t bc = 0; bc < bw; ++bc) {
      double block[4][4];
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
          const std::size_t rr =
              std::min(br * 4 + static_cast<std::size_t>(r), img.h - 1);
          const std::size_t cc =
              std::min(bc * 4 + static_cast<std::size_t>(c), img.w - 1);
          block[r][c] = img.at(rr, cc);
        }
      double coef[4][4];
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          double s = 0.0;
          for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
              s += phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] *
                   phi[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] *
                   block[r][c];
          coef[k][l] = step * std::round(s / step);
        }
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
          const std::size_t rr = br * 4 + static_cast<std::size_t>(r);
          const std::size_t cc = bc * 4 + static_cast<std::size_t>(c);
          if (rr >= img.h || cc >= img.w) continue;
          double s = 0.0;
          for (int k = 0; k < 4; ++k)
            for (int l = 0; l < 4; ++l)
              s += phi[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] *
                   phi[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] *
                   coef[k][l];
          img.at(rr, cc) = clamp01(s);
        }
    }
}

}  // namespace detail

// Severity tables. Brightness uses the positive shift; the monotone clamp
// saturation it causes is what degrades ranking.
inline double perturbation_parameter(PerturbationKind kind, int severity) {
  if (severity < 1 || severity > 3)
    throw ConfigError("perturbation parameter defined for severities 1..3");
  const std::size_t s = static_cast<std::size_t>(severity - 1);
  switch (kind) {
    case PerturbationKind::gaussian_blur: {
      static constexpr double sigma[3] = {0.5, 1.0, 2.0};
      return sigma[s];
    }
    case PerturbationKind::jpeg_like: {
      static constexpr double step[3] = {0.05, 0.1, 0.2};
      return step[s];
    }
    case PerturbationKind::additive_noise: {
      static constexpr double sd[3] = {0.05, 0.1, 0.2};
      return sd[s];
    }
    case PerturbationKind::brightness: {
      static constexpr double delta[3] = {0.1, 0.2, 0.3};
      return delta[s];
    }
    case PerturbationKind::contrast: {
      static constexpr double factor[3] = {1.2, 1.5, 2.0};
      return factor[s];
    }
  }
  throw ConfigError("unreachable perturbation kind");
}

// Applies one degradation and clamps to [0,1]. noise_seed only matters for
// additive_noise; deriving it from the image identity and holding it fixed
// across severities gives every severity the same underlying noise field
// scaled up, so degradation grows with severity by construction.
inline TinyImage perturb(const TinyImage& img, const PerturbationSpec& spec,
                         std::uint64_t noise_seed = 0) {
  img.validate();
  spec.validate();
  TinyImage out = img;
  if (spec.severity == 0) return out;

  const double param = perturbation_parameter(spec.kind, spec.severity);
  switch (spec.kind) {
    case PerturbationKind::gaussian_blur:
      detail::blur_separable(out, param);
      break;
    case PerturbationKind::jpeg_like:
      detail::jpeg_like_quantize(out, param);
      break;
    case PerturbationKind::additive_noise: {
      Rng rng(noise_seed);
      for (double& p : out.pixels)
        p = detail::clamp01(p + param * rng.normal());
      break;
    }
    case PerturbationKind::brightness:
      for (double& p : out.pixels) p = detail::clamp01(p + param);
      break;
    case PerturbationKind::contrast:
      for (double& p : out.pixels)
        p = detail::clamp01(0.5 + param * (p - 0.5));
      break;
  }
  return out;
}

// ============================================================
// Dataset bridging and files
// ============================================================

inline Dataset images_to_dataset(const std::vector<TinyImage>& images,
                                 const std::string& id_prefix = "img") {
  if (images.empty()) throw ValidationError("images_to_dataset: no images");
  Dataset ds;
  int width = 1;
  for (std::size_t n = images.size(); n >= 10; n /= 10) ++width;
  for (std::size_t i = 0; i < images.size(); ++i) {
    images[i].validate();
    if (images[i].h != images[0].h || images[i].w != images[0].w)
      throw ValidationError("images_to_dataset: mixed image sizes");
    std::string num = std::to_string(i);
    ds.sample_ids.push_back(
        id_prefix + std::string(static_cast<std::size_t>(width) - num.size(), '0') +
        num);
    ds.labels.push_back(images[i].label);
    ds.features.push_back(images[i].pixels);
  }
  ds.validate();
  return ds;
}

// CSV of flattened rows: sample_id,label,px_0,...,px_{HW-1}. Geometry rides
// in a JSON sidecar written by the CLI layer.
inline std::string images_to_csv(const std::vector<TinyImage>& images,
                                 const std::string& id_prefix = "img") {
  const Dataset ds = images_to_dataset(images, id_prefix);
  std::string out = "sample_id,label";
  for (std::size_t d = 0; d < ds.dim(); ++d)
    out += ",px_" + std::to_string(d);
  out += "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out += ds.sample_ids[i];
    out += ',';
    out += std::to_string(ds.labels[i]);
    for (double v : ds.features[i]) {
      out += ',';
      out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

inline std::vector<TinyImage> images_from_csv(const std::string& text,
                                              std::size_t h, std::size_t w,
                                              const std::string& name) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw IoError(name + ": empty image file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() != 2 + h * w || header[0] != "sample_id" ||
      header[1] != "label")
    throw IoError(name + ": header does not match sidecar geometry " +
                  std::to_string(h) + "x" + std::to_string(w));
  for (std::size_t d = 0; d < h * w; ++d)
    if (header[2 + d] != "px_" + std::to_string(d))
      throw IoError(name + ": bad pixel column at position " +
                    std::to_string(d));
  std::vector<TinyImage> images;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::string where = name + ":" + std::to_string(ln + 1);
    const auto fields = split_csv_line(lines[ln]);
    if (fields.size() != header.size())
      throw IoError(where + ": expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(fields.size()));
    TinyImage img;
    img.h = h;
    img.w = w;
    const long long lab = parse_int(fields[1], where);
    if (lab != 0 && lab != 1) throw IoError(where + ": label must be 0 or 1");
    img.label = static_cast<int>(lab);
    img.pixels.reserve(h * w);
    for (std::size_t d = 0; d < h * w; ++d)
      img.pixels.push_back(parse_double(fields[2 + d], where));
    try {
      img.validate();
    } catch (const std::exception& e) {
      throw IoError(where + ": " + e.what());
    }
    images.push_back(std::move(img));
  }
  if (images.empty()) throw IoError(name + ": no image rows after header");
  return images;
}

// ============================================================
// Robustness harness
// ============================================================

struct RobustnessRow {
  std::string kind;      // "clean" for the unperturbed baseline row
  int severity = 0;
  double auc = 0.0;
  double accuracy = 0.0;
  double delta_auc = 0.0;  // clean AUC minus this row's AUC
};

// Scores the clean set, then each perturbed variant, with one row per spec.
// Additive-noise fields are keyed by (seed, image index) so every severity
// sees the same noise shape.
inline std::vector<RobustnessRow> robustness_eval(
    const LogisticModel& model, const std::vector<TinyImage>& images,
    const std::vector<PerturbationSpec>& specs, std::uint64_t seed = 0) {
  if (images.empty()) throw ValidationError("robustness_eval: no images");
  for (const auto& img : images) {
    img.validate();
    if (img.pixels.size() != model.theta.size())
      throw ValidationError(
          "robustness_eval: model dimension does not match image size");
  }
  for (const auto& spec : specs) spec.validate();

  const auto score_set =
      [&](const std::vector<TinyImage>& set) -> ScoredPredictions {
    ScoredPredictions sp;
    sp.scores.reserve(set.size());
    sp.labels.reserve(set.size());
    for (const auto& img : set) {
      sp.scores.push_back(model.forward(img.pixels));
      sp.labels.push_back(img.label);
    }
    return sp;
  };

  const ScoredPredictions clean = score_set(images);
  const double clean_auc = roc_auc(clean);

  std::vector<RobustnessRow> table;
  RobustnessRow base;
  base.kind = "clean";
  base.severity = 0;
  base.auc = clean_auc;
  base.accuracy = confusion_metrics(confusion_counts(clean)).accuracy;
  base.delta_auc = 0.0;
  table.push_back(base);

  for (const auto& spec : specs) {
    std::vector<TinyImage> variant;
    variant.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i)
      variant.push_back(perturb(
          images[i], spec, mix_seed(seed, "noise" + std::to_string(i))));
    const ScoredPredictions sp = score_set(variant);
    RobustnessRow row;
    row.kind = to_string(spec.kind);
    row.severity = spec.severity;
    row.auc = roc_auc(sp);
    row.accuracy = confusion_metrics(confusion_counts(sp)).accuracy;
    row.delta_auc = clean_auc - row.auc;
    table.push_back(row);
  }
  return table;
}

inline std::vector<PerturbationSpec> full_perturbation_grid() {
  std::vector<PerturbationSpec> specs;
  for (PerturbationKind kind :
       {PerturbationKind::gaussian_blur, PerturbationKind::jpeg_like,
        PerturbationKind::additive_noise, PerturbationKind::brightness,
        PerturbationKind::contrast})
    for (int sev = 1; sev <= 3; ++sev) specs.push_back({kind, sev});
  return specs;
}

}  // namespace fossil
