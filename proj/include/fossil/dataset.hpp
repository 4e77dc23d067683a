#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fossil/common.hpp"
#include "fossil/rng.hpp"
#include "fossil/textio.hpp"

namespace fossil {

// Row-aligned tabular dataset with opaque string ids and binary labels.
struct Dataset {
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
  std::vector<std::vector<double>> features;

  std::size_t n() const { return sample_ids.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features[0].size(); }

  void validate() const {
    if (sample_ids.size() != labels.size() ||
        sample_ids.size() != features.size())
      throw ValidationError("Dataset: column lengths disagree");
    if (sample_ids.empty()) throw ValidationError("Dataset: empty");
    std::set<std::string> seen;
    for (const auto& id : sample_ids) {
      require_plain_id(id, "Dataset");
      if (!seen.insert(id).second)
        throw ValidationError("Dataset: duplicate sample_id '" + id + "'");
    }
    for (int y : labels)
      if (y != 0 && y != 1)
        throw ValidationError("Dataset: labels must be 0 or 1");
    for (const auto& row : features) {
      if (row.size() != dim())
        throw ValidationError("Dataset: ragged feature rows");
      for (double v : row)
        if (!std::isfinite(v))
          throw ValidationError("Dataset: non-finite feature");
    }
  }

  bool has_both_classes() const {
    bool c0 = false, c1 = false;
    for (int y : labels) (y == 0 ? c0 : c1) = true;
    return c0 && c1;
  }
};

// Gaussian blob specification: one isotropic Gaussian per class, optional
// label noise flips the recorded label after sampling.
struct BlobSpec {
  std::vector<std::size_t> n_per_class;
  std::size_t dim = 2;
  std::vector<std::vector<double>> means;  // one per class
  double cov_scale = 1.0;                  // shared isotropic sigma
  double label_noise = 0.0;                // flip probability per sample
  std::uint64_t seed = 0;

  void validate() const {
    if (n_per_class.size() != 2 || means.size() != 2)
      throw ValidationError("BlobSpec: exactly two classes required");
    for (std::size_t c = 0; c < 2; ++c) {
      if (n_per_class[c] == 0)
        throw ValidationError("BlobSpec: class counts must be positive");
      if (means[c].size() != dim)
        throw ValidationError("BlobSpec: mean dimension mismatch");
      for (double m : means[c])
        if (!std::isfinite(m))
          throw ValidationError("BlobSpec: non-finite mean");
    }
    if (dim == 0) throw ValidationError("BlobSpec: dim must be positive");
    if (!(std::isfinite(cov_scale)) || cov_scale <= 0.0)
      throw ValidationError("BlobSpec: cov_scale must be > 0");
    if (!(label_noise >= 0.0 && label_noise < 1.0))
      throw ValidationError("BlobSpec: label_noise must lie in [0, 1)");
  }
};

// Deterministic per seed: features first (class 0 block, then class 1),
// then one flip draw per sample. Ids are zero-padded so lexicographic and
// generation order agree.
inline Dataset generate_blobs(const BlobSpec& spec) {
  spec.validate();
  Dataset ds;
  const std::size_t total = spec.n_per_class[0] + spec.n_per_class[1];
  std::size_t width = 1;
  for (std::size_t v = total; v >= 10; v /= 10) ++width;

  Rng rng(mix_seed(spec.seed, "blobs"));
  std::size_t idx = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < spec.n_per_class[c]; ++i, ++idx) {
      std::string id = std::to_string(idx);
      ds.sample_ids.push_back("s" + std::string(width - id.size(), '0') + id);
      ds.labels.push_back(static_cast<int>(c));
      std::vector<double> row(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d)
        row[d] = spec.means[c][d] + spec.cov_scale * rng.normal();
      ds.features.push_back(std::move(row));
    }
  }
  if (spec.label_noise > 0.0) {
    Rng flip(mix_seed(spec.seed, "label_noise"));
    for (auto& y : ds.labels)
      if (flip.uniform() < spec.label_noise) y = 1 - y;
  }
  ds.validate();
  return ds;
}

// CSV layout: sample_id,label,f_0,...,f_{d-1}; one row per sample.
inline std::string dataset_to_csv(const Dataset& ds) {
  ds.validate();
  std::string out = "sample_id,label";
  for (std::size_t d = 0; d < ds.dim(); ++d)
    out += ",f_" + std::to_string(d);
  out += "\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out += ds.sample_ids[i];
    out += ",";
    out += std::to_string(ds.labels[i]);
    for (double v : ds.features[i]) {
      out += ",";
      out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

inline Dataset dataset_from_csv(const std::string& text,
                                const std::string& name) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw IoError(name + ": empty file");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "label")
    throw IoError(name + ":1: expected header sample_id,label,f_0,...");
  for (std::size_t d = 0; d + 2 < header.size(); ++d)
    if (header[d + 2] != "f_" + std::to_string(d))
      throw IoError(name + ":1: unexpected feature column '" + header[d + 2] +
                    "'");
  const std::size_t dim = header.size() - 2;

  Dataset ds;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const std::string where = name + ":" + std::to_string(ln + 1);
    const auto fields = split_csv_line(lines[ln]);
    if (fields.size() != header.size())
      throw IoError(where + ": expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(fields.size()));
    ds.sample_ids.push_back(fields[0]);
    const long long y = parse_int(fields[1], where);
    if (y != 0 && y != 1)
      throw IoError(where + ": label must be 0 or 1");
    ds.labels.push_back(static_cast<int>(y));
    std::vector<double> row(dim);
    for (std::size_t d = 0; d < dim; ++d)
      row[d] = parse_double(fields[d + 2], where);
    ds.features.push_back(std::move(row));
  }
  if (ds.sample_ids.empty()) throw IoError(name + ": no data rows");
  try {
    ds.validate();
  } catch (const ValidationError& e) {
    throw IoError(name + ": " + e.what());
  }
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_csv(ds));
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_csv(read_text_file(path), path.filename().string());
}

}  // namespace fossil
