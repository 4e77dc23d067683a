#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "fossil/common.hpp"
#include "fossil/stats.hpp"

namespace fossil {

// Class-probability vector for one sample; entries in [0, 1] summing to 1
// within 1e-9.
struct ProbabilityVector {
  std::vector<double> probs;

  void validate() const {
    if (probs.size() < 2)
      throw ValidationError("ProbabilityVector: needs at least 2 classes");
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0)
        throw ValidationError(
            "ProbabilityVector: entries must lie in [0, 1]");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw ValidationError("ProbabilityVector: entries must sum to 1");
  }
};

// Difficulty as residual confidence: 1 - max_c p_c. Confident predictions
// score near 0; a uniform vector over C classes scores 1 - 1/C.
inline double softmax_difficulty(const ProbabilityVector& pv) {
  pv.validate();
  double mx = pv.probs[0];
  for (double p : pv.probs) mx = std::max(mx, p);
  return 1.0 - mx;
}

// Shannon entropy in nats, with 0 * log 0 = 0; range [0, ln C].
inline double entropy_difficulty(const ProbabilityVector& pv) {
  pv.validate();
  double h = 0.0;
  for (double p : pv.probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

enum class DifficultyMetric { softmax, entropy };

inline std::string to_string(DifficultyMetric m) {
  return m == DifficultyMetric::softmax ? "softmax" : "entropy";
}

inline DifficultyMetric difficulty_metric_from(const std::string& s) {
  if (s == "softmax") return DifficultyMetric::softmax;
  if (s == "entropy") return DifficultyMetric::entropy;
  throw ConfigError("unknown difficulty metric '" + s + "'");
}

inline double difficulty_score(DifficultyMetric m,
                               const ProbabilityVector& pv) {
  return m == DifficultyMetric::softmax ? softmax_difficulty(pv)
                                        : entropy_difficulty(pv);
}

struct DifficultyRecord {
  std::string sample_id;
  int label = 0;
  double score = 0.0;
  int stage = -1;  // assigned by apply_stages
};

// Quantile partition of difficulty scores into curriculum stages.
struct CurriculumPartition {
  std::vector<double> thresholds;      // strictly ascending after collapse
  int requested_stages = 0;
  std::vector<std::string> warnings;   // machine-readable codes

  int n_stages() const { return static_cast<int>(thresholds.size()) + 1; }

  // Scores equal to a threshold fall in the lower stage.
  int stage_for(double score) const {
    int s = 0;
    for (double t : thresholds)
      if (t < score) ++s;
    return s;
  }
};

// Quantile of a sorted sample by linear interpolation between order
// statistics: position h = (n - 1) q, value s[floor h] + frac(h) * step.
inline double interpolated_quantile(const std::vector<double>& sorted,
                                    double q) {
  if (sorted.empty())
    throw ValidationError("interpolated_quantile: empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - std::floor(h)) * (sorted[lo + 1] - sorted[lo]);
}

// Builds stage thresholds at quantiles j/S for j in 1..S-1. Equal thresholds
// collapse (warning "collapsed_thresholds"); identical scores degenerate to
// a single stage (warning "degenerate_all_scores_equal"). Assignment is by
// threshold comparison with ties to the lower stage, so equal scores always
// share a stage and stage is monotone in score.
inline CurriculumPartition stratify(const std::vector<DifficultyRecord>& records,
                                    int n_stages) {
  if (n_stages < 2)
    throw ValidationError("stratify: need at least 2 stages");
  if (records.size() < static_cast<std::size_t>(n_stages))
    throw ValidationError("stratify: fewer samples than stages");
  for (const auto& r : records)
    if (!std::isfinite(r.score))
      throw ValidationError("stratify: non-finite score for sample '" +
                            r.sample_id + "'");

  std::vector<double> sorted(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) sorted[i] = records[i].score;
  std::sort(sorted.begin(), sorted.end());

  CurriculumPartition part;
  part.requested_stages = n_stages;
  if (sorted.front() == sorted.back()) {
    part.warnings.push_back("degenerate_all_scores_equal");
    return part;  // no thresholds: everything in stage 0
  }

  for (int j = 1; j < n_stages; ++j) {
    const double t = interpolated_quantile(
        sorted, static_cast<double>(j) / static_cast<double>(n_stages));
    if (part.thresholds.empty() || t > part.thresholds.back())
      part.thresholds.push_back(t);
    else
      part.warnings.push_back("collapsed_thresholds");
  }
  return part;
}

// Writes stage indices onto the records.
inline void apply_stages(std::vector<DifficultyRecord>& records,
                         const CurriculumPartition& part) {
  for (auto& r : records) r.stage = part.stage_for(r.score);
}

// Scores grouped by assigned stage, index 0..n_stages-1.
inline std::vector<std::vector<double>> scores_by_stage(
    const std::vector<DifficultyRecord>& records,
    const CurriculumPartition& part) {
  std::vector<std::vector<double>> groups(
      static_cast<std::size_t>(part.n_stages()));
  for (const auto& r : records)
    groups[static_cast<std::size_t>(part.stage_for(r.score))].push_back(
        r.score);
  return groups;
}

struct StagePairTest {
  int stage_a = 0;
  int stage_b = 0;
  TestResult result;
};

struct StageValidationReport {
  std::vector<StagePairTest> pairwise;  // Mann-Whitney per ordered stage pair
  TestResult omnibus;                   // Kruskal-Wallis across all stages
};

// Checks that the stages genuinely separate the score distribution:
// Mann-Whitney for every ordered stage pair (lower stage first) plus the
// Kruskal-Wallis omnibus. Every stage must be occupied.
inline StageValidationReport validate_stages(
    const std::vector<DifficultyRecord>& records,
    const CurriculumPartition& part) {
  const auto groups = scores_by_stage(records, part);
  if (groups.size() < 2)
    throw ValidationError("validate_stages: partition has a single stage");
  for (std::size_t s = 0; s < groups.size(); ++s)
    if (groups[s].empty())
      throw ValidationError("validate_stages: stage " + std::to_string(s) +
                            " has no samples");

  StageValidationReport rep;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      StagePairTest pt;
      pt.stage_a = static_cast<int>(i);
      pt.stage_b = static_cast<int>(j);
      pt.result = mann_whitney_u(groups[i], groups[j]);
      rep.pairwise.push_back(std::move(pt));
    }
  rep.omnibus = kruskal_wallis(groups);
  return rep;
}

// Tests whether difficulty differs between the two classes (a proxy for
// label-correlated scoring); Mann-Whitney on class-0 vs class-1 scores.
inline TestResult class_bias_check(
    const std::vector<DifficultyRecord>& records) {
  std::vector<double> class0, class1;
  for (const auto& r : records) {
    if (r.label == 0) class0.push_back(r.score);
    else if (r.label == 1) class1.push_back(r.score);
    else
      throw ValidationError("class_bias_check: label must be 0 or 1, got " +
                            std::to_string(r.label) + " for sample '" +
                            r.sample_id + "'");
  }
  if (class0.empty() || class1.empty())
    throw ValidationError("class_bias_check: needs both classes present");
  return mann_whitney_u(class0, class1);
}

}  // namespace fossil
