#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fossil/common.hpp"

namespace fossil {

using WeightVector = std::vector<double>;

enum class WeightScheme { uniform, fossil, focal, meta };
enum class MetaTransform { identity, normalized };
enum class ScheduleKind { constant, linear_decay, exponential_decay };

inline std::string to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::uniform: return "uniform";
    case WeightScheme::fossil: return "fossil";
    case WeightScheme::focal: return "focal";
    case WeightScheme::meta: return "meta";
  }
  return "?";
}

inline WeightScheme weight_scheme_from(const std::string& s) {
  if (s == "uniform") return WeightScheme::uniform;
  if (s == "fossil") return WeightScheme::fossil;
  if (s == "focal") return WeightScheme::focal;
  if (s == "meta") return WeightScheme::meta;
  throw ConfigError("unknown weighting scheme '" + s + "'");
}

inline std::string to_string(MetaTransform t) {
  return t == MetaTransform::identity ? "identity" : "normalized";
}

inline MetaTransform meta_transform_from(const std::string& s) {
  if (s == "identity") return MetaTransform::identity;
  if (s == "normalized") return MetaTransform::normalized;
  throw ConfigError("unknown meta transform '" + s + "'");
}

inline std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::linear_decay: return "linear_decay";
    case ScheduleKind::exponential_decay: return "exponential_decay";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "linear_decay") return ScheduleKind::linear_decay;
  if (s == "exponential_decay") return ScheduleKind::exponential_decay;
  throw ConfigError("unknown schedule kind '" + s + "'");
}

// Exponential difficulty weighting w = exp(-d / T). For d >= 0 and T > 0 the
// weight sits in (0, 1]: easy samples keep full influence, hard ones decay
// smoothly, and larger T flattens the decay (dw/dT = (d/T^2) exp(-d/T) > 0).
inline double fossil_weight(double difficulty, double temperature) {
  if (!(std::isfinite(difficulty)) || difficulty < 0.0)
    throw ValidationError("fossil_weight: difficulty must be finite and >= 0");
  if (!(std::isfinite(temperature)) || temperature <= 0.0)
    throw ValidationError("fossil_weight: temperature must be finite and > 0");
  return std::exp(-difficulty / temperature);
}

// Focal-style weight (1 - p_true)^gamma; p_true is the model probability of
// the true class. gamma = 0 reduces to uniform.
inline double focal_weight(double p_true, double gamma) {
  if (!(p_true >= 0.0 && p_true <= 1.0))
    throw ValidationError("focal_weight: p_true must lie in [0, 1]");
  if (!(std::isfinite(gamma)) || gamma < 0.0)
    throw ValidationError("focal_weight: gamma must be finite and >= 0");
  return std::pow(1.0 - p_true, gamma);
}

// Loss-proportional weights. identity keeps raw losses; normalized rescales
// to mean 1 (an all-zero loss vector stays all-zero).
inline WeightVector meta_weight(const std::vector<double>& losses,
                                MetaTransform transform) {
  WeightVector w(losses.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!(std::isfinite(losses[i])) || losses[i] < 0.0)
      throw ValidationError("meta_weight: losses must be finite and >= 0");
    w[i] = losses[i];
    sum += losses[i];
  }
  if (transform == MetaTransform::normalized && sum > 0.0) {
    const double mean = sum / static_cast<double>(losses.size());
    for (double& x : w) x /= mean;
  }
  return w;
}

// Weighted empirical loss (1/N) * sum_i w_i * l_i. The divisor is N, not the
// weight sum: downweighting a sample genuinely shrinks its contribution
// rather than being renormalized away.
inline double weighted_loss(const std::vector<double>& losses,
                            const WeightVector& weights) {
  if (losses.size() != weights.size())
    throw ValidationError("weighted_loss: length mismatch");
  if (losses.empty())
    throw ValidationError("weighted_loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(losses[i]) || !std::isfinite(weights[i]))
      throw ValidationError("weighted_loss: non-finite input");
    s += weights[i] * losses[i];
  }
  return s / static_cast<double>(losses.size());
}

// Epoch-indexed temperature schedule; every emitted value is >= t_min and
// the sequence is non-increasing.
struct TemperatureSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double t0 = 1.0;
  double t_min = 1e-3;
  double decay = 0.0;  // linear: per-step decrement; exponential: factor

  static TemperatureSchedule constant(double t) {
    TemperatureSchedule s;
    s.kind = ScheduleKind::constant;
    s.t0 = t;
    s.t_min = t;
    return s;
  }

  void validate() const {
    if (!(std::isfinite(t0)) || t0 <= 0.0)
      throw ConfigError("temperature schedule: t0 must be > 0");
    if (!(std::isfinite(t_min)) || t_min <= 0.0)
      throw ConfigError("temperature schedule: t_min must be > 0");
    if (t_min > t0)
      throw ConfigError("temperature schedule: t_min must not exceed t0");
    if (kind == ScheduleKind::linear_decay &&
        (!std::isfinite(decay) || decay < 0.0))
      throw ConfigError("temperature schedule: linear decay must be >= 0");
    if (kind == ScheduleKind::exponential_decay &&
        (!std::isfinite(decay) || decay <= 0.0 || decay > 1.0))
      throw ConfigError(
          "temperature schedule: exponential decay must lie in (0, 1]");
  }

  double at(std::size_t t) const {
    switch (kind) {
      case ScheduleKind::constant:
        return t0;
      case ScheduleKind::linear_decay:
        return std::max(t_min, t0 - decay * static_cast<double>(t));
      case ScheduleKind::exponential_decay:
        return std::max(t_min, t0 * std::pow(decay, static_cast<double>(t)));
    }
    throw ConfigError("temperature schedule: unknown kind");
  }
};

inline double schedule_temperature(const TemperatureSchedule& s,
                                   std::size_t t) {
  s.validate();
  return s.at(t);
}

// One active scheme per configuration; the inactive fields keep defaults.
struct WeightingConfig {
  WeightScheme scheme = WeightScheme::fossil;
  double temperature = 1.0;              // fossil, when no schedule is given
  double gamma = 2.0;                    // focal
  MetaTransform meta_transform = MetaTransform::normalized;
  bool has_schedule = false;
  TemperatureSchedule schedule;          // fossil, overrides temperature

  void validate() const {
    if (!(std::isfinite(temperature)) || temperature <= 0.0)
      throw ConfigError("weighting: temperature must be > 0");
    if (!(std::isfinite(gamma)) || gamma < 0.0)
      throw ConfigError("weighting: gamma must be >= 0");
    if (has_schedule) schedule.validate();
  }

  double temperature_at(std::size_t epoch) const {
    return has_schedule ? schedule.at(epoch) : temperature;
  }
};

}  // namespace fossil
