#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fossil/common.hpp"
#include "fossil/rng.hpp"
#include "fossil/weighting.hpp"

namespace fossil {

// ============================================================
// Feasible set: Euclidean ball
// ============================================================

struct FeasibleBall {
  std::vector<double> center;
  double radius = 1.0;

  void validate() const {
    if (center.empty())
      throw ValidationError("FeasibleBall: empty center");
    if (!(std::isfinite(radius)) || radius <= 0.0)
      throw ValidationError("FeasibleBall: radius must be finite and > 0");
    for (double c : center)
      if (!std::isfinite(c))
        throw ValidationError("FeasibleBall: non-finite center");
  }

  double diameter() const { return 2.0 * radius; }

  double dist2(const std::vector<double>& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < center.size(); ++i) {
      const double d = p[i] - center[i];
      s += d * d;
    }
    return s;
  }

  bool contains(const std::vector<double>& p) const {
    return dist2(p) <= radius * radius;
  }
};

// Euclidean projection onto the ball. Interior points are returned
// untouched, so the operation is bitwise idempotent; the shrink loop absorbs
// the rare case where rounding leaves the scaled point marginally outside.
inline std::vector<double> project(std::vector<double> p,
                                   const FeasibleBall& ball) {
  ball.validate();
  if (p.size() != ball.center.size())
    throw ValidationError("project: dimension mismatch");
  for (double v : p)
    if (!std::isfinite(v)) throw ValidationError("project: non-finite point");

  const double d2 = ball.dist2(p);
  const double r2 = ball.radius * ball.radius;
  if (d2 <= r2) return p;

  double scale = ball.radius / std::sqrt(d2);
  while (true) {
    std::vector<double> q(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
      q[i] = ball.center[i] + scale * (p[i] - ball.center[i]);
    if (ball.dist2(q) <= r2) return q;
    scale *= 1.0 - 0x1.0p-52;
  }
}

// ============================================================
// Per-round convex losses
// ============================================================

enum class LossFamily { quadratic, logistic, absolute };

inline std::string to_string(LossFamily f) {
  switch (f) {
    case LossFamily::quadratic: return "quadratic";
    case LossFamily::logistic: return "logistic";
    case LossFamily::absolute: return "absolute";
  }
  return "?";
}

inline LossFamily loss_family_from(const std::string& s) {
  if (s == "quadratic") return LossFamily::quadratic;
  if (s == "logistic") return LossFamily::logistic;
  if (s == "absolute") return LossFamily::absolute;
  throw ConfigError("unknown loss family '" + s + "'");
}

namespace detail {

// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
// deterministic start; small dimensions only.
inline double spectral_norm(const std::vector<std::vector<double>>& q) {
  const std::size_t n = q.size();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w[i] += q[i][j] * v[j];
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    lambda = norm;
  }
  return lambda;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) {
  return std::sqrt(dot(a, a));
}

}  // namespace detail

// One round of the stream. quadratic: (t - a)' Q (t - a) with Q symmetric
// PSD. logistic: log(1 + exp(-y <x, t>)) with y in {-1, +1}. absolute:
// |<x, t> - y|. weight is the per-round multiplier applied to the gradient,
// in [0, 1]; zero is legal and makes the round a no-op step.
struct LossRound {
  LossFamily family = LossFamily::quadratic;
  std::vector<double> a;                  // quadratic target
  std::vector<std::vector<double>> q;     // quadratic curvature
  std::vector<double> x;                  // logistic / absolute feature
  double y = 1.0;                         // logistic label or absolute target
  double weight = 1.0;

  void validate(std::size_t dim) const {
    if (!(weight >= 0.0) || weight > 1.0 || !std::isfinite(weight))
      throw ValidationError("LossRound: weight must lie in [0, 1]");
    if (family == LossFamily::quadratic) {
      if (a.size() != dim || q.size() != dim)
        throw ValidationError("LossRound: quadratic dimension mismatch");
      for (std::size_t i = 0; i < dim; ++i) {
        if (q[i].size() != dim)
          throw ValidationError("LossRound: Q is not square");
        for (std::size_t j = 0; j < dim; ++j)
          if (std::fabs(q[i][j] - q[j][i]) > 1e-9)
            throw ValidationError("LossRound: Q is not symmetric");
        if (q[i][i] < -1e-12)
          throw ValidationError("LossRound: Q has a negative diagonal");
      }
    } else {
      if (x.size() != dim)
        throw ValidationError("LossRound: feature dimension mismatch");
      if (family == LossFamily::logistic && y != 1.0 && y != -1.0)
        throw ValidationError("LossRound: logistic label must be +1 or -1");
    }
  }

  double eval(const std::vector<double>& t) const {
    switch (family) {
      case LossFamily::quadratic: {
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j < t.size(); ++j)
            row += q[i][j] * (t[j] - a[j]);
          s += (t[i] - a[i]) * row;
        }
        return s;
      }
      case LossFamily::logistic: {
        const double z = y * detail::dot(x, t);
        // log(1 + e^{-z}) without overflow on either tail
        return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
      }
      case LossFamily::absolute:
        return std::fabs(detail::dot(x, t) - y);
    }
    throw ValidationError("LossRound: unknown family");
  }

  std::vector<double> grad(const std::vector<double>& t) const {
    std::vector<double> g(t.size(), 0.0);
    switch (family) {
      case LossFamily::quadratic: {
        for (std::size_t i = 0; i < t.size(); ++i)
          for (std::size_t j = 0; j < t.size(); ++j)
            g[i] += 2.0 * q[i][j] * (t[j] - a[j]);
        return g;
      }
      case LossFamily::logistic: {
        const double z = y * detail::dot(x, t);
        // sigma(-z), computed on the stable side
        const double s =
            z > 0.0 ? std::exp(-z) / (1.0 + std::exp(-z))
                    : 1.0 / (1.0 + std::exp(z));
        for (std::size_t i = 0; i < t.size(); ++i) g[i] = -y * s * x[i];
        return g;
      }
      case LossFamily::absolute: {
        const double u = detail::dot(x, t) - y;
        const double sgn = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
        for (std::size_t i = 0; i < t.size(); ++i) g[i] = sgn * x[i];
        return g;
      }
    }
    throw ValidationError("LossRound: unknown family");
  }

  // Gradient-norm bound over the ball, from the closed form per family.
  double lipschitz(const FeasibleBall& ball) const {
    switch (family) {
      case LossFamily::quadratic: {
        std::vector<double> diff(ball.center.size());
        for (std::size_t i = 0; i < diff.size(); ++i)
          diff[i] = ball.center[i] - a[i];
        return 2.0 * detail::spectral_norm(q) *
               (ball.radius + detail::norm2(diff));
      }
      case LossFamily::logistic:
      case LossFamily::absolute:
        return detail::norm2(x);
    }
    throw ValidationError("LossRound: unknown family");
  }

  // Smoothness (gradient Lipschitz) bound, used to size descent steps.
  // The absolute family is nonsmooth; its term only shrinks the step.
  double smoothness() const {
    switch (family) {
      case LossFamily::quadratic:
        return 2.0 * detail::spectral_norm(q);
      case LossFamily::logistic:
        return 0.25 * detail::dot(x, x);
      case LossFamily::absolute:
        return detail::dot(x, x);
    }
    throw ValidationError("LossRound: unknown family");
  }
};

struct ConvexLossStream {
  FeasibleBall ball;
  std::vector<LossRound> rounds;

  std::size_t dim() const { return ball.center.size(); }

  void validate() const {
    ball.validate();
    if (rounds.empty())
      throw ValidationError("ConvexLossStream: no rounds");
    for (std::size_t t = 0; t < rounds.size(); ++t) {
      try {
        rounds[t].validate(dim());
      } catch (const ValidationError& e) {
        throw ValidationError("round " + std::to_string(t) + ": " + e.what());
      }
    }
  }

  // Max per-round gradient bound over the ball.
  double lipschitz() const {
    double g = 0.0;
    for (const auto& r : rounds) g = std::max(g, r.lipschitz(ball));
    return g;
  }
};

// ============================================================
// Hindsight optimum
// ============================================================

// Minimizes the prefix total loss over the ball by projected full-gradient
// descent with backtracking. Convergence is declared when the projected
// gradient residual at a fixed probe step drops to tol (at interior optima
// this is the plain gradient norm). The step never exceeds the probe step
// 1 / sum(smoothness): letting it grow further looks faster early on, but
// past 2/L the iteration stops contracting and the roundoff slack in the
// accept test then sustains a residual limit cycle around the optimum that
// never reaches tol on long prefixes. Streams with absolute-deviation
// rounds are nonsmooth and typically cannot reach a 1e-10 residual; the
// iteration cap then raises with the final residual.
inline std::vector<double> hindsight_optimum(
    const ConvexLossStream& stream, std::size_t prefix,
    double tol = 1e-10, std::size_t max_iter = 200000,
    const std::vector<double>* warm_start = nullptr) {
  stream.validate();
  if (prefix == 0 || prefix > stream.rounds.size())
    throw ValidationError("hindsight_optimum: bad prefix length");

  const std::size_t dim = stream.dim();
  double smooth = 0.0;
  for (std::size_t t = 0; t < prefix; ++t)
    smooth += stream.rounds[t].smoothness();
  if (smooth <= 0.0) smooth = 1.0;
  const double probe = 1.0 / smooth;

  auto total = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t t = 0; t < prefix; ++t) s += stream.rounds[t].eval(p);
    return s;
  };
  auto grad = [&](const std::vector<double>& p) {
    std::vector<double> g(dim, 0.0);
    for (std::size_t t = 0; t < prefix; ++t) {
      const auto gt = stream.rounds[t].grad(p);
      for (std::size_t i = 0; i < dim; ++i) g[i] += gt[i];
    }
    return g;
  };

  std::vector<double> theta =
      warm_start ? project(*warm_start, stream.ball) : stream.ball.center;
  double f = total(theta);
  double eta = probe;
  double residual = 0.0;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    const auto g = grad(theta);
    for (double v : g)
      if (!std::isfinite(v))
        throw NumericError("hindsight_optimum: non-finite gradient");

    // Fixed-step probe residual; independent of the adaptive step size.
    std::vector<double> moved(dim);
    for (std::size_t i = 0; i < dim; ++i) moved[i] = theta[i] - probe * g[i];
    const auto probe_pt = project(std::move(moved), stream.ball);
    double r2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = theta[i] - probe_pt[i];
      r2 += d * d;
    }
    residual = std::sqrt(r2) / probe;
    if (residual <= tol) return theta;

    // Backtracking on the descent-lemma test.
    while (true) {
      std::vector<double> cand(dim);
      for (std::size_t i = 0; i < dim; ++i) cand[i] = theta[i] - eta * g[i];
      cand = project(std::move(cand), stream.ball);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = cand[i] - theta[i];
        lin += g[i] * d;
        sq += d * d;
      }
      const double fc = total(cand);
      // Slack absorbs roundoff in the two large totals near convergence.
      if (fc <= f + lin + sq / (2.0 * eta) + 1e-12 * std::fabs(f) + 1e-30) {
        theta = std::move(cand);
        f = fc;
        eta = std::min(eta * 1.1, probe);
        break;
      }
      eta *= 0.5;
      if (eta < 1e-18 * probe)
        throw NumericError(
            "hindsight_optimum: step collapsed; residual " +
            std::to_string(residual));
    }
  }
  throw NumericError("hindsight_optimum: no convergence in " +
                     std::to_string(max_iter) +
                     " iterations; residual " + std::to_string(residual));
}

// ============================================================
// Weighted projected online gradient descent
// ============================================================

// Regret bound D^2 / (2 eta_T) + (eta_T G^2 / 2) * sum_t w_t^2.
inline double regret_bound(double diameter, double lipschitz, double eta_final,
                           const std::vector<double>& weights) {
  if (!(diameter > 0.0) || !(lipschitz >= 0.0) || !(eta_final > 0.0))
    throw ValidationError("regret_bound: needs D > 0, G >= 0, eta > 0");
  double wsq = 0.0;
  for (double w : weights) wsq += w * w;
  return diameter * diameter / (2.0 * eta_final) +
         0.5 * eta_final * lipschitz * lipschitz * wsq;
}

struct RegretTrace {
  std::vector<std::vector<double>> params;  // theta_t before the update
  std::vector<double> losses;               // l_t(theta_t)
  std::vector<double> step_sizes;
  std::vector<double> weights;
  std::vector<double> cum_regret;    // vs the horizon optimum
  std::vector<double> bound_curve;   // bound formula evaluated at horizon t
  std::vector<double> optimum;
  double optimum_total = 0.0;
  double total_loss = 0.0;
  double regret = 0.0;
  double bound = 0.0;
  double lipschitz = 0.0;
};

using StepSchedule = std::function<double(std::size_t)>;  // 1-based round

// Fills the regret columns of a finished trace against a given comparator
// (normally the hindsight optimum, possibly warm-started by the caller).
inline void attach_hindsight(RegretTrace& trace, const ConvexLossStream& stream,
                             std::vector<double> optimum) {
  const std::size_t horizon = trace.losses.size();
  if (horizon == 0 || horizon > stream.rounds.size())
    throw ValidationError("attach_hindsight: trace/stream length mismatch");
  trace.optimum = std::move(optimum);
  double cum = 0.0, cum_opt = 0.0;
  trace.cum_regret.clear();
  trace.cum_regret.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    cum += trace.losses[t];
    cum_opt += stream.rounds[t].eval(trace.optimum);
    trace.cum_regret.push_back(cum - cum_opt);
  }
  trace.optimum_total = cum_opt;
  trace.regret = trace.cum_regret.back();
}

// Default schedule eta_t = D / (G sqrt(t)).
inline StepSchedule inv_sqrt_schedule(double diameter, double lipschitz) {
  if (!(diameter > 0.0) || !(lipschitz > 0.0))
    throw ValidationError("inv_sqrt_schedule: needs D > 0 and G > 0");
  return [diameter, lipschitz](std::size_t t) {
    return diameter / (lipschitz * std::sqrt(static_cast<double>(t)));
  };
}

// Runs theta_{t+1} = project(theta_t - eta_t w_t g_t). The trace records the
// realized trajectory plus the hindsight optimum and the regret bound so a
// run is self-contained evidence for or against the O(sqrt(T)) claim.
inline RegretTrace run_weighted_ogd(const ConvexLossStream& stream,
                                    StepSchedule eta = nullptr,
                                    const std::vector<double>* theta0 = nullptr,
                                    bool with_hindsight = true) {
  stream.validate();
  const std::size_t dim = stream.dim();
  const std::size_t horizon = stream.rounds.size();

  RegretTrace trace;
  trace.lipschitz = stream.lipschitz();
  if (!eta) eta = inv_sqrt_schedule(stream.ball.diameter(), trace.lipschitz);

  std::vector<double> theta = theta0 ? *theta0 : stream.ball.center;
  if (theta.size() != dim)
    throw ValidationError("run_weighted_ogd: theta0 dimension mismatch");
  if (!stream.ball.contains(theta))
    throw ValidationError("run_weighted_ogd: theta0 outside the feasible ball");

  trace.params.reserve(horizon);
  trace.losses.reserve(horizon);
  trace.step_sizes.reserve(horizon);
  trace.weights.reserve(horizon);

  for (std::size_t t = 0; t < horizon; ++t) {
    const LossRound& round = stream.rounds[t];
    const double step = eta(t + 1);
    if (!(step > 0.0) || !std::isfinite(step))
      throw ValidationError("run_weighted_ogd: step size must be positive");

    trace.params.push_back(theta);
    const double loss = round.eval(theta);
    if (!std::isfinite(loss))
      throw NumericError("run_weighted_ogd: non-finite loss at round " +
                         std::to_string(t));
    trace.losses.push_back(loss);
    trace.step_sizes.push_back(step);
    trace.weights.push_back(round.weight);
    trace.total_loss += loss;

    auto g = round.grad(theta);
    for (double v : g)
      if (!std::isfinite(v))
        throw NumericError("run_weighted_ogd: non-finite gradient at round " +
                           std::to_string(t));
    for (std::size_t i = 0; i < dim; ++i)
      theta[i] -= step * round.weight * g[i];
    theta = project(std::move(theta), stream.ball);
  }

  // Bound curve: formula at each horizon t with eta_t as the final step.
  double wsq = 0.0;
  const double d = stream.ball.diameter();
  trace.bound_curve.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    wsq += trace.weights[t] * trace.weights[t];
    trace.bound_curve.push_back(
        d * d / (2.0 * trace.step_sizes[t]) +
        0.5 * trace.step_sizes[t] * trace.lipschitz * trace.lipschitz * wsq);
  }
  trace.bound = trace.bound_curve.back();

  if (with_hindsight)
    attach_hindsight(trace, stream, hindsight_optimum(stream, horizon));
  return trace;
}

// ============================================================
// Regret growth rate
// ============================================================

struct SlopeFit {
  double slope = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // non-positive regret horizons dropped
};

// Least-squares slope of log R against log T. Horizons with non-positive
// regret carry no log and are dropped (counted); at least two positive
// horizons are required for a fit.
inline SlopeFit regret_slope(
    const std::vector<std::pair<double, double>>& horizon_regret) {
  std::vector<double> lx, ly;
  SlopeFit fit;
  for (const auto& [t, r] : horizon_regret) {
    if (!(t > 0.0))
      throw ValidationError("regret_slope: horizons must be positive");
    if (r > 0.0) {
      lx.push_back(std::log(t));
      ly.push_back(std::log(r));
    } else {
      ++fit.excluded;
    }
  }
  if (lx.size() < 2)
    throw ValidationError(
        "regret_slope: fewer than 2 positive-regret horizons");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0)
    throw ValidationError("regret_slope: horizons must be distinct");
  fit.slope = sxy / sxx;
  fit.used = lx.size();
  return fit;
}

// ============================================================
// Seeded stream generation
// ============================================================

struct StreamGenSpec {
  std::uint64_t seed = 0;
  std::size_t rounds = 0;
  std::size_t dim = 2;
  std::vector<LossFamily> families = {LossFamily::quadratic};
  double radius = 3.0;
  std::vector<double> center;        // defaults to the origin
  double weight_temperature = 1.0;   // fossil weights of U[0,1] difficulties
};

// Rounds cycle through the requested families; parameters are drawn so the
// stream is well conditioned (quadratics are M M' + 0.1 I, logistic labels
// are independent coin flips so no prefix is separable in aggregate).
inline ConvexLossStream generate_stream(const StreamGenSpec& spec) {
  if (spec.rounds == 0)
    throw ValidationError("generate_stream: rounds must be positive");
  if (spec.dim == 0)
    throw ValidationError("generate_stream: dim must be positive");
  if (spec.families.empty())
    throw ValidationError("generate_stream: needs at least one family");

  ConvexLossStream stream;
  stream.ball.center =
      spec.center.empty() ? std::vector<double>(spec.dim, 0.0) : spec.center;
  if (stream.ball.center.size() != spec.dim)
    throw ValidationError("generate_stream: center dimension mismatch");
  stream.ball.radius = spec.radius;

  Rng rng(mix_seed(spec.seed, "stream"));
  stream.rounds.reserve(spec.rounds);
  for (std::size_t t = 0; t < spec.rounds; ++t) {
    LossRound round;
    round.family = spec.families[t % spec.families.size()];
    switch (round.family) {
      case LossFamily::quadratic: {
        round.a.resize(spec.dim);
        for (auto& v : round.a) v = rng.uniform(-0.5, 0.5) * spec.radius;
        std::vector<std::vector<double>> m(
            spec.dim, std::vector<double>(spec.dim));
        for (auto& row : m)
          for (auto& v : row)
            v = rng.normal() / std::sqrt(static_cast<double>(spec.dim));
        round.q.assign(spec.dim, std::vector<double>(spec.dim, 0.0));
        const double scale = rng.uniform(0.2, 0.8);
        for (std::size_t i = 0; i < spec.dim; ++i)
          for (std::size_t j = 0; j < spec.dim; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < spec.dim; ++k) s += m[i][k] * m[j][k];
            round.q[i][j] = scale * s + (i == j ? 0.1 : 0.0);
          }
        break;
      }
      case LossFamily::logistic: {
        round.x.resize(spec.dim);
        double n2 = 0.0;
        for (auto& v : round.x) {
          v = rng.normal();
          n2 += v * v;
        }
        const double target = rng.uniform(0.5, 2.0);
        const double norm = std::sqrt(n2);
        if (norm > 0.0)
          for (auto& v : round.x) v *= target / norm;
        round.y = rng.uniform() < 0.5 ? -1.0 : 1.0;
        break;
      }
      case LossFamily::absolute: {
        round.x.resize(spec.dim);
        for (auto& v : round.x) v = rng.normal();
        round.y = rng.uniform(-1.0, 1.0);
        break;
      }
    }
    round.weight = fossil_weight(rng.uniform(), spec.weight_temperature);
    stream.rounds.push_back(std::move(round));
  }
  return stream;
}

}  // namespace fossil
