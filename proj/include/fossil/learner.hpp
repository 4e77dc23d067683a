#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fossil/common.hpp"
#include "fossil/dataset.hpp"
#include "fossil/difficulty.hpp"
#include "fossil/metrics.hpp"
#include "fossil/rng.hpp"
#include "fossil/weighting.hpp"

namespace fossil {

// Probability clamp for the cross-entropy; forward outputs are additionally
// kept inside the open interval so saturated logits never return 0 or 1.
inline constexpr double kProbClamp = 1e-12;

struct LogisticModel {
  std::vector<double> theta;
  double bias = 0.0;

  double forward(const std::vector<double>& x) const {
    if (x.size() != theta.size())
      throw ValidationError("LogisticModel: feature dimension mismatch");
    double z = bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += theta[i] * x[i];
    double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                        : std::exp(z) / (1.0 + std::exp(z));
    if (p >= 1.0) p = 1.0 - 0x1.0p-53;   // keep the open interval
    if (p <= 0.0) p = 0x1.0p-1074;
    return p;
  }
};

struct BatchGradient {
  double loss = 0.0;               // weighted objective incl. the l2 term
  std::vector<double> grad_theta;
  double grad_bias = 0.0;
  std::size_t clamped = 0;         // samples hitting the probability clamp
};

// Weighted binary cross-entropy over the given rows:
// (1/N) sum_i w_i * bce(p_i, y_i) + (l2/2) ||theta||^2, with N the row
// count. Probabilities are clamped to [1e-12, 1 - 1e-12]; a clamped sample's
// loss is locally constant in the parameters, so its gradient contribution
// is zero (keeps the analytic gradient equal to the derivative of the loss
// actually computed). The bias is not regularized.
inline BatchGradient weighted_bce(const LogisticModel& model,
                                  const Dataset& ds,
                                  const std::vector<std::size_t>& rows,
                                  const WeightVector& weights, double l2) {
  if (rows.size() != weights.size())
    throw ValidationError("weighted_bce: rows/weights length mismatch");
  if (rows.empty()) throw ValidationError("weighted_bce: empty batch");
  for (double w : weights)
    if (!std::isfinite(w) || w < 0.0)
      throw ValidationError("weighted_bce: weights must be finite and >= 0");

  BatchGradient out;
  out.grad_theta.assign(model.theta.size(), 0.0);
  const double n = static_cast<double>(rows.size());

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = rows[k];
    const auto& x = ds.features[i];
    const double y = static_cast<double>(ds.labels[i]);
    double p = model.forward(x);
    bool clamped = false;
    if (p < kProbClamp) {
      p = kProbClamp;
      clamped = true;
    } else if (p > 1.0 - kProbClamp) {
      p = 1.0 - kProbClamp;
      clamped = true;
    }
    if (clamped) ++out.clamped;

    const double w = weights[k];
    out.loss += w * (-(y * std::log(p) + (1.0 - y) * std::log1p(-p)));
    if (!clamped && w != 0.0) {
      const double factor = w * (p - y);
      for (std::size_t d = 0; d < x.size(); ++d)
        out.grad_theta[d] += factor * x[d];
      out.grad_bias += factor;
    }
  }

  out.loss /= n;
  for (double& g : out.grad_theta) g /= n;
  out.grad_bias /= n;

  if (l2 > 0.0) {
    double sq = 0.0;
    for (std::size_t d = 0; d < model.theta.size(); ++d) {
      sq += model.theta[d] * model.theta[d];
      out.grad_theta[d] += l2 * model.theta[d];
    }
    out.loss += 0.5 * l2 * sq;
  }
  return out;
}

// ============================================================
// Training
// ============================================================

enum class CurriculumMode { all_at_once, cumulative_stages };
enum class EarlyStopMetric { val_auc, val_loss };

inline CurriculumMode curriculum_mode_from(const std::string& s) {
  if (s == "all_at_once") return CurriculumMode::all_at_once;
  if (s == "cumulative_stages") return CurriculumMode::cumulative_stages;
  throw ConfigError("unknown curriculum mode '" + s + "'");
}

inline std::string to_string(CurriculumMode m) {
  return m == CurriculumMode::all_at_once ? "all_at_once" : "cumulative_stages";
}

inline EarlyStopMetric early_stop_metric_from(const std::string& s) {
  if (s == "val_auc") return EarlyStopMetric::val_auc;
  if (s == "val_loss") return EarlyStopMetric::val_loss;
  throw ConfigError("unknown early stop metric '" + s + "'");
}

inline std::string to_string(EarlyStopMetric m) {
  return m == EarlyStopMetric::val_auc ? "val_auc" : "val_loss";
}

struct TrainConfig {
  WeightingConfig weighting;
  CurriculumMode curriculum = CurriculumMode::all_at_once;
  std::size_t epochs_per_stage = 50;   // cumulative_stages only
  double learning_rate = 0.5;
  std::size_t max_epochs = 200;
  std::size_t early_stop_patience = 25;
  EarlyStopMetric early_stop_metric = EarlyStopMetric::val_auc;
  double l2 = 0.0;
  double init_scale = 0.01;            // stddev of the seeded theta init
  std::uint64_t seed = 0;

  void validate() const {
    weighting.validate();
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("train: learning_rate must be > 0");
    if (max_epochs == 0) throw ConfigError("train: max_epochs must be > 0");
    if (early_stop_patience == 0)
      throw ConfigError("train: early_stop_patience must be >= 1");
    if (curriculum == CurriculumMode::cumulative_stages && epochs_per_stage == 0)
      throw ConfigError("train: epochs_per_stage must be > 0");
    if (!(l2 >= 0.0) || !std::isfinite(l2))
      throw ConfigError("train: l2 must be >= 0");
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
      throw ConfigError("train: init_scale must be >= 0");
  }
};

// Frozen difficulty for the training rows, aligned with the row list passed
// to train(). Stages come from a curriculum partition of the same rows.
struct DifficultyInfo {
  std::vector<double> scores;
  std::vector<int> stages;
  int n_stages = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;             // weighted objective before the step
  double val_loss = 0.0;               // unweighted mean bce after the step
  std::optional<double> val_auc;       // absent when val has one class
  std::size_t active_n = 0;
  double temperature = 0.0;
};

struct TrainResult {
  LogisticModel model;                 // best epoch when val present
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::size_t clamp_events = 0;        // total clamped samples over epochs
  std::vector<std::string> warnings;
};

namespace detail {

inline double unweighted_val_loss(const LogisticModel& model,
                                  const Dataset& ds,
                                  const std::vector<std::size_t>& rows) {
  double s = 0.0;
  for (std::size_t i : rows) {
    double p = model.forward(ds.features[i]);
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    const double y = static_cast<double>(ds.labels[i]);
    s += -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
  }
  return s / static_cast<double>(rows.size());
}

}  // namespace detail

// Full-batch gradient descent on the weighted objective. FOSSIL weights are
// recomputed every epoch from the frozen difficulty scores and the scheduled
// temperature; focal and meta weights follow the current model state. The
// cumulative curriculum unlocks stages in ascending order with equal epoch
// budgets and never removes unlocked samples. Early stopping watches
// validation AUC with the configured patience, falling back to validation
// loss (with a warning) when the validation split has a single class.
inline TrainResult train(const Dataset& ds,
                         const std::vector<std::size_t>& train_rows,
                         const std::vector<std::size_t>& val_rows,
                         const DifficultyInfo& difficulty,
                         const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (train_rows.empty()) throw ValidationError("train: no training rows");
  for (std::size_t i : train_rows)
    if (i >= ds.n()) throw ValidationError("train: row index out of range");
  {
    bool c0 = false, c1 = false;
    for (std::size_t i : train_rows) (ds.labels[i] == 0 ? c0 : c1) = true;
    if (!c0 || !c1)
      throw ValidationError("train: training rows must contain both classes");
  }
  const bool needs_difficulty =
      cfg.weighting.scheme == WeightScheme::fossil ||
      cfg.curriculum == CurriculumMode::cumulative_stages;
  if (needs_difficulty && difficulty.scores.size() != train_rows.size())
    throw ValidationError("train: difficulty not aligned with training rows");
  if (cfg.curriculum == CurriculumMode::cumulative_stages &&
      difficulty.stages.size() != train_rows.size())
    throw ValidationError("train: stages not aligned with training rows");

  TrainResult res;
  Rng init_rng(mix_seed(cfg.seed, "init"));
  res.model.theta.resize(ds.dim());
  for (double& v : res.model.theta) v = cfg.init_scale * init_rng.normal();
  res.model.bias = 0.0;

  const bool has_val = !val_rows.empty();
  bool val_auc_defined = false;
  if (has_val) {
    bool c0 = false, c1 = false;
    for (std::size_t i : val_rows) (ds.labels[i] == 0 ? c0 : c1) = true;
    val_auc_defined = c0 && c1;
    if (!val_auc_defined && cfg.early_stop_metric == EarlyStopMetric::val_auc)
      res.warnings.push_back("val_auc_undefined_using_val_loss");
  }
  const EarlyStopMetric stop_metric =
      (cfg.early_stop_metric == EarlyStopMetric::val_auc && val_auc_defined)
          ? EarlyStopMetric::val_auc
          : EarlyStopMetric::val_loss;

  LogisticModel best = res.model;
  double best_value = 0.0;
  bool have_best = false;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double temp = cfg.weighting.temperature_at(epoch);

    // Active rows for this epoch.
    std::vector<std::size_t> active;
    std::vector<std::size_t> active_pos;  // position within train_rows
    if (cfg.curriculum == CurriculumMode::cumulative_stages) {
      const int unlocked = std::min<int>(
          difficulty.n_stages,
          static_cast<int>(epoch / cfg.epochs_per_stage) + 1);
      for (std::size_t k = 0; k < train_rows.size(); ++k)
        if (difficulty.stages[k] < unlocked) {
          active.push_back(train_rows[k]);
          active_pos.push_back(k);
        }
      if (active.empty())
        throw ValidationError("train: first curriculum stage is empty");
    } else {
      active = train_rows;
      active_pos.resize(train_rows.size());
      for (std::size_t k = 0; k < train_rows.size(); ++k) active_pos[k] = k;
    }

    // Per-sample weights for this epoch.
    WeightVector w(active.size(), 1.0);
    switch (cfg.weighting.scheme) {
      case WeightScheme::uniform:
        break;
      case WeightScheme::fossil:
        for (std::size_t k = 0; k < active.size(); ++k)
          w[k] = fossil_weight(difficulty.scores[active_pos[k]], temp);
        break;
      case WeightScheme::focal:
        for (std::size_t k = 0; k < active.size(); ++k) {
          const double p = res.model.forward(ds.features[active[k]]);
          const double p_true = ds.labels[active[k]] == 1 ? p : 1.0 - p;
          w[k] = focal_weight(p_true, cfg.weighting.gamma);
        }
        break;
      case WeightScheme::meta: {
        std::vector<double> losses(active.size());
        for (std::size_t k = 0; k < active.size(); ++k) {
          double p = res.model.forward(ds.features[active[k]]);
          p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
          const double y = static_cast<double>(ds.labels[active[k]]);
          losses[k] = -(y * std::log(p) + (1.0 - y) * std::log1p(-p));
        }
        w = meta_weight(losses, cfg.weighting.meta_transform);
        break;
      }
    }

    const BatchGradient bg = weighted_bce(res.model, ds, active, w, cfg.l2);
    res.clamp_events += bg.clamped;

    for (std::size_t d = 0; d < res.model.theta.size(); ++d)
      res.model.theta[d] -= cfg.learning_rate * bg.grad_theta[d];
    res.model.bias -= cfg.learning_rate * bg.grad_bias;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = bg.loss;
    rec.active_n = active.size();
    rec.temperature = temp;

    if (has_val) {
      rec.val_loss = detail::unweighted_val_loss(res.model, ds, val_rows);
      if (val_auc_defined) {
        ScoredPredictions sp;
        sp.scores.reserve(val_rows.size());
        sp.labels.reserve(val_rows.size());
        for (std::size_t i : val_rows) {
          sp.scores.push_back(res.model.forward(ds.features[i]));
          sp.labels.push_back(ds.labels[i]);
        }
        rec.val_auc = roc_auc(sp);
      }

      const double value = stop_metric == EarlyStopMetric::val_auc
                               ? *rec.val_auc
                               : rec.val_loss;
      const bool improved =
          !have_best || (stop_metric == EarlyStopMetric::val_auc
                             ? value > best_value
                             : value < best_value);
      if (improved) {
        best = res.model;
        best_value = value;
        res.best_epoch = epoch;
        have_best = true;
        since_best = 0;
      } else {
        ++since_best;
      }
      res.history.push_back(rec);
      if (since_best >= cfg.early_stop_patience) break;
    } else {
      res.history.push_back(rec);
    }
  }

  if (has_val && have_best) res.model = best;
  else res.best_epoch = res.history.size() - 1;
  return res;
}

// ============================================================
// Stratified folds
// ============================================================

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> val_rows;
  std::vector<std::vector<std::size_t>> train_rows;
};

// Stratified k-fold: each class is shuffled (seeded per class) and dealt
// into per-fold quotas of floor/ceil(n_c / k). Remainder slots walk a cursor
// shared across classes so the fold size spread stays within one sample.
// Deterministic in (dataset order, seed).
inline FoldPlan make_folds(const std::vector<int>& labels, std::size_t k,
                           std::uint64_t seed) {
  if (k < 2) throw ValidationError("make_folds: k must be at least 2");
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("make_folds: labels must be 0 or 1");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < 2; ++c)
    if (by_class[c].size() < k)
      throw ValidationError("make_folds: class " + std::to_string(c) +
                            " has " + std::to_string(by_class[c].size()) +
                            " samples, fewer than k = " + std::to_string(k));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.val_rows.assign(k, {});
  std::size_t cursor = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    Rng rng(mix_seed(seed, "fold_class" + std::to_string(c)));
    rng.shuffle(idx);
    const std::size_t base = idx.size() / k;
    const std::size_t rem = idx.size() % k;
    std::vector<std::size_t> quota(k, base);
    for (std::size_t j = 0; j < rem; ++j) quota[(cursor + j) % k] += 1;
    cursor = (cursor + rem) % k;
    std::size_t at = 0;
    for (std::size_t f = 0; f < k; ++f)
      for (std::size_t q = 0; q < quota[f]; ++q)
        plan.val_rows[f].push_back(idx[at++]);
  }

  plan.train_rows.assign(k, {});
  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(plan.val_rows[f].begin(), plan.val_rows[f].end());
    for (std::size_t i : plan.val_rows[f]) fold_of[i] = f;
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t f = 0; f < k; ++f)
      if (fold_of[i] != f) plan.train_rows[f].push_back(i);
  return plan;
}

// ============================================================
// Cross-validated evaluation
// ============================================================

// Supplies class-probability vectors for the requested rows only; the row
// list is exactly the difficulty-scoring input, so training code can prove
// the validation split never leaks into difficulty estimation.
class DifficultySource {
public:
  virtual ~DifficultySource() = default;
  virtual std::vector<ProbabilityVector> probabilities(
      const Dataset& ds, const std::vector<std::size_t>& rows,
      std::uint64_t seed) const = 0;
};

// Trains a uniform-weight logistic probe on the given rows and reads
// difficulty from its own predictions on those rows.
class SelfProbeSource : public DifficultySource {
public:
  SelfProbeSource(std::size_t epochs, double learning_rate, double l2)
      : epochs_(epochs), learning_rate_(learning_rate), l2_(l2) {}

  std::vector<ProbabilityVector> probabilities(
      const Dataset& ds, const std::vector<std::size_t>& rows,
      std::uint64_t seed) const override {
    TrainConfig cfg;
    cfg.weighting.scheme = WeightScheme::uniform;
    cfg.learning_rate = learning_rate_;
    cfg.max_epochs = epochs_;
    cfg.l2 = l2_;
    cfg.seed = mix_seed(seed, "probe");
    const TrainResult probe = train(ds, rows, {}, DifficultyInfo{}, cfg);
    std::vector<ProbabilityVector> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) {
      const double p = probe.model.forward(ds.features[i]);
      out.push_back(ProbabilityVector{{1.0 - p, p}});
    }
    return out;
  }

private:
  std::size_t epochs_;
  double learning_rate_;
  double l2_;
};

// Fixed table of probabilities keyed by sample id (e.g. loaded from a file).
class TableSource : public DifficultySource {
public:
  explicit TableSource(std::map<std::string, ProbabilityVector> table)
      : table_(std::move(table)) {}

  std::vector<ProbabilityVector> probabilities(
      const Dataset& ds, const std::vector<std::size_t>& rows,
      std::uint64_t) const override {
    std::vector<ProbabilityVector> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) {
      const auto it = table_.find(ds.sample_ids[i]);
      if (it == table_.end())
        throw ValidationError("difficulty table missing sample '" +
                              ds.sample_ids[i] + "'");
      out.push_back(it->second);
    }
    return out;
  }

private:
  std::map<std::string, ProbabilityVector> table_;
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {
      "auc", "accuracy", "sensitivity", "specificity",
      "f1",  "ppv",      "npv",         "ece"};
  return names;
}

struct RunRecord {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  bool failed = false;
  std::string error;
  std::map<std::string, std::optional<double>> metrics;
  std::vector<std::string> warnings;
  std::vector<std::string> difficulty_input_ids;
  std::vector<std::string> val_ids;
  std::vector<EpochRecord> history;
  LogisticModel model;
  std::size_t best_epoch = 0;
};

struct MetricAggregate {
  double mean = 0.0;
  double stddev = 0.0;                            // sample std, n - 1
  std::size_t n = 0;                              // defined values
  std::vector<std::optional<double>> per_fold;    // (seed, fold) order
};

struct CvReport {
  std::vector<RunRecord> runs;                    // (seed, fold) order
  std::map<std::string, MetricAggregate> aggregate;
};

struct CvSettings {
  std::size_t k = 5;
  DifficultyMetric metric = DifficultyMetric::softmax;
  int n_stages = 4;
  TrainConfig train;      // per-run seed derived internally
  std::size_t workers = 1;
};

namespace detail {

template <typename Fn>
inline void run_units(std::size_t n_units, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n_units));
  if (workers == 1) {
    for (std::size_t u = 0; u < n_units; ++u) fn(u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t wk = 0; wk < workers; ++wk)
    pool.emplace_back([&] {
      while (true) {
        const std::size_t u = next.fetch_add(1);
        if (u >= n_units) return;
        fn(u);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// One training run per (seed, fold). Difficulty is always scored on the
// fold's training rows only, through the supplied source; the ids that went
// into scoring are recorded per run so leakage is checkable after the fact.
// A failed unit is recorded and skipped in aggregation rather than sinking
// the whole report.
inline CvReport run_cv(const Dataset& ds, const CvSettings& settings,
                       const std::vector<std::uint64_t>& seeds,
                       const DifficultySource& source) {
  ds.validate();
  settings.train.validate();
  if (seeds.empty()) throw ValidationError("run_cv: no seeds");

  struct Unit {
    std::uint64_t seed;
    std::size_t fold;
  };
  std::vector<Unit> units;
  std::vector<FoldPlan> plans;
  plans.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    plans.push_back(make_folds(ds.labels, settings.k, seed));
    for (std::size_t f = 0; f < settings.k; ++f)
      units.push_back({seed, f});
  }

  CvReport report;
  report.runs.resize(units.size());

  detail::run_units(units.size(), settings.workers, [&](std::size_t u) {
    const auto [seed, fold] = units[u];
    RunRecord& rec = report.runs[u];
    rec.seed = seed;
    rec.fold = fold;
    const FoldPlan& plan = plans[u / settings.k];
    const auto& train_rows = plan.train_rows[fold];
    const auto& val_rows = plan.val_rows[fold];
    for (std::size_t i : val_rows) rec.val_ids.push_back(ds.sample_ids[i]);
    try {
      const std::uint64_t run_seed = mix_seed(seed, "fold" + std::to_string(fold));

      // Difficulty from the training rows only.
      const auto probs = source.probabilities(ds, train_rows, run_seed);
      if (probs.size() != train_rows.size())
        throw ValidationError("difficulty source returned wrong row count");
      for (std::size_t i : train_rows)
        rec.difficulty_input_ids.push_back(ds.sample_ids[i]);

      std::vector<DifficultyRecord> drecs(train_rows.size());
      DifficultyInfo info;
      info.scores.resize(train_rows.size());
      for (std::size_t kk = 0; kk < train_rows.size(); ++kk) {
        info.scores[kk] = difficulty_score(settings.metric, probs[kk]);
        drecs[kk] = DifficultyRecord{ds.sample_ids[train_rows[kk]],
                                     ds.labels[train_rows[kk]],
                                     info.scores[kk], -1};
      }
      const CurriculumPartition part = stratify(drecs, settings.n_stages);
      info.n_stages = part.n_stages();
      info.stages.resize(train_rows.size());
      for (std::size_t kk = 0; kk < train_rows.size(); ++kk)
        info.stages[kk] = part.stage_for(info.scores[kk]);
      for (const auto& wmsg : part.warnings)
        rec.warnings.push_back("stratify:" + wmsg);

      TrainConfig cfg = settings.train;
      cfg.seed = run_seed;
      TrainResult tr = train(ds, train_rows, val_rows, info, cfg);
      rec.history = std::move(tr.history);
      rec.model = std::move(tr.model);
      rec.best_epoch = tr.best_epoch;
      for (auto& wmsg : tr.warnings) rec.warnings.push_back(wmsg);

      ScoredPredictions sp;
      for (std::size_t i : val_rows) {
        sp.scores.push_back(rec.model.forward(ds.features[i]));
        sp.labels.push_back(ds.labels[i]);
      }
      const ConfusionMetrics cm = confusion_metrics(confusion_counts(sp));
      rec.metrics["accuracy"] = cm.accuracy;
      rec.metrics["sensitivity"] = cm.sensitivity;
      rec.metrics["specificity"] = cm.specificity;
      rec.metrics["f1"] = cm.f1;
      rec.metrics["ppv"] = cm.ppv;
      rec.metrics["npv"] = cm.npv;
      rec.metrics["ece"] = ece(sp);
      try {
        rec.metrics["auc"] = roc_auc(sp);
      } catch (const UndefinedMetricError&) {
        rec.metrics["auc"] = std::nullopt;
        rec.warnings.push_back("val_auc_undefined");
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
  });

  for (const auto& name : metric_names()) {
    MetricAggregate agg;
    std::vector<double> vals;
    for (const auto& rec : report.runs) {
      const auto it = rec.metrics.find(name);
      const std::optional<double> v =
          (rec.failed || it == rec.metrics.end()) ? std::nullopt : it->second;
      agg.per_fold.push_back(v);
      if (v) vals.push_back(*v);
    }
    agg.n = vals.size();
    if (!vals.empty()) {
      double s = 0.0;
      for (double v : vals) s += v;
      agg.mean = s / static_cast<double>(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - agg.mean) * (v - agg.mean);
        agg.stddev = std::sqrt(ss / static_cast<double>(vals.size() - 1));
      }
    }
    report.aggregate[name] = std::move(agg);
  }
  return report;
}

}  // namespace fossil
