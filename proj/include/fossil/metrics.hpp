#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fossil/common.hpp"
#include "fossil/stats.hpp"

namespace fossil {

// Scores are probabilities of the positive class; labels are 0/1.
struct ScoredPredictions {
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }

  void validate() const {
    if (scores.size() != labels.size())
      throw ValidationError("ScoredPredictions: scores/labels length mismatch");
    if (scores.empty())
      throw ValidationError("ScoredPredictions: empty input");
    for (double s : scores)
      if (!std::isfinite(s) || s < 0.0 || s > 1.0)
        throw ValidationError("ScoredPredictions: score outside [0, 1]");
    for (int y : labels)
      if (y != 0 && y != 1)
        throw ValidationError("ScoredPredictions: label must be 0 or 1");
  }
};

// Rank-based AUC: fraction of (positive, negative) pairs ranked correctly,
// ties counted 1/2. Computed from midranks, which is algebraically identical
// to the pairwise count. Requires both classes present.
inline double roc_auc(const ScoredPredictions& pred) {
  pred.validate();
  std::size_t n_pos = 0;
  for (int y : pred.labels) n_pos += static_cast<std::size_t>(y);
  const std::size_t n_neg = pred.labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw UndefinedMetricError("roc_auc: needs both classes present");

  const RankInfo ri = midranks(pred.scores);
  double r_pos = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred.labels[i] == 1) r_pos += ri.ranks[i];
  const double np = static_cast<double>(n_pos);
  return (r_pos - 0.5 * np * (np + 1.0)) /
         (np * static_cast<double>(n_neg));
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// Thresholded prediction: score >= threshold is a positive call.
inline ConfusionCounts confusion_counts(const ScoredPredictions& pred,
                                        double threshold = 0.5) {
  pred.validate();
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool call_pos = pred.scores[i] >= threshold;
    const bool is_pos = pred.labels[i] == 1;
    if (call_pos && is_pos) ++c.tp;
    else if (call_pos && !is_pos) ++c.fp;
    else if (!call_pos && is_pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

// Ratios with zero denominators are reported as absent, never NaN.
struct ConfusionMetrics {
  double accuracy = 0.0;
  std::optional<double> sensitivity;  // tp / (tp + fn)
  std::optional<double> specificity;  // tn / (tn + fp)
  std::optional<double> ppv;          // tp / (tp + fp)
  std::optional<double> npv;          // tn / (tn + fn)
  std::optional<double> f1;           // harmonic mean of ppv and sensitivity
};

inline ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
  const std::size_t n = c.tp + c.fp + c.tn + c.fn;
  if (n == 0) throw ValidationError("confusion_metrics: empty counts");
  ConfusionMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
  if (c.tp + c.fn > 0)
    m.sensitivity = static_cast<double>(c.tp) /
                    static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0)
    m.specificity = static_cast<double>(c.tn) /
                    static_cast<double>(c.tn + c.fp);
  if (c.tp + c.fp > 0)
    m.ppv = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tn + c.fn > 0)
    m.npv = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fn);
  if (m.ppv && m.sensitivity && (*m.ppv + *m.sensitivity) > 0.0)
    m.f1 = 2.0 * (*m.ppv) * (*m.sensitivity) / (*m.ppv + *m.sensitivity);
  return m;
}

// Expected calibration error over equal-width bins, right-closed:
// bin k covers (k/B, (k+1)/B], with 0.0 assigned to the bottom bin and 1.0
// landing in the top bin. Per bin: |mean correctness - mean score| weighted
// by occupancy. Correctness is the 0.5-thresholded call matching the label.
inline double ece(const ScoredPredictions& pred, std::size_t n_bins = 15) {
  pred.validate();
  if (n_bins == 0) throw ValidationError("ece: n_bins must be positive");
  const double bd = static_cast<double>(n_bins);

  std::vector<double> conf_sum(n_bins, 0.0), acc_sum(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double s = pred.scores[i];
    // First k with s <= (k+1)/B; boundary scores compare exactly.
    std::size_t k = 0;
    while (k + 1 < n_bins && s > static_cast<double>(k + 1) / bd) ++k;
    conf_sum[k] += s;
    const bool call_pos = s >= 0.5;
    const bool correct = call_pos == (pred.labels[i] == 1);
    acc_sum[k] += correct ? 1.0 : 0.0;
    ++count[k];
  }

  double e = 0.0;
  const double n = static_cast<double>(pred.size());
  for (std::size_t k = 0; k < n_bins; ++k) {
    if (count[k] == 0) continue;
    const double c = static_cast<double>(count[k]);
    e += (c / n) * std::fabs(acc_sum[k] / c - conf_sum[k] / c);
  }
  return e;
}

// AUC drop from clean to perturbed predictions; positive means degradation.
inline double delta_auc(const ScoredPredictions& clean,
                        const ScoredPredictions& perturbed) {
  return roc_auc(clean) - roc_auc(perturbed);
}

}  // namespace fossil
