#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "fossil/oco.hpp"
#include "fossil/rng.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace fossil;

namespace {

LossRound quad_round(std::vector<double> a,
                     std::vector<std::vector<double>> q, double w = 1.0) {
  LossRound r;
  r.family = LossFamily::quadratic;
  r.a = std::move(a);
  r.q = std::move(q);
  r.weight = w;
  return r;
}

LossRound logi_round(std::vector<double> x, double y, double w = 1.0) {
  LossRound r;
  r.family = LossFamily::logistic;
  r.x = std::move(x);
  r.y = y;
  r.weight = w;
  return r;
}

LossRound abs_round(std::vector<double> x, double y, double w = 1.0) {
  LossRound r;
  r.family = LossFamily::absolute;
  r.x = std::move(x);
  r.y = y;
  r.weight = w;
  return r;
}

FeasibleBall ball2(double radius) {
  FeasibleBall b;
  b.center = {0.0, 0.0};
  b.radius = radius;
  return b;
}

// Dense 2-D grid search with window refinement; candidates outside the ball
// are pulled back by plain radial scaling.
std::vector<double> grid_min2d(const ConvexLossStream& stream,
                               std::size_t prefix) {
  auto clip = [&](double x, double y) {
    const double dx = x - stream.ball.center[0];
    const double dy = y - stream.ball.center[1];
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d <= stream.ball.radius) return std::vector<double>{x, y};
    const double s = stream.ball.radius / d;
    return std::vector<double>{stream.ball.center[0] + s * dx,
                               stream.ball.center[1] + s * dy};
  };
  auto total = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t t = 0; t < prefix; ++t) s += stream.rounds[t].eval(p);
    return s;
  };
  std::vector<double> best{stream.ball.center};
  double fbest = total(best);
  double half = stream.ball.radius;
  for (int level = 0; level < 9; ++level) {
    const double cx = best[0], cy = best[1];
    for (int i = -20; i <= 20; ++i) {
      for (int j = -20; j <= 20; ++j) {
        const auto p = clip(cx + half * i / 20.0, cy + half * j / 20.0);
        const double f = total(p);
        if (f < fbest) {
          fbest = f;
          best = p;
        }
      }
    }
    half /= 10.0;  // next window spans +-2 cells of this level
  }
  return best;
}

}  // namespace

TEST_CASE("projection onto the feasible ball", "[oco]") {
  const FeasibleBall b = ball2(1.0);
  SECTION("worked examples") {
    const auto p = project({3.0, 4.0}, b);
    CHECK_THAT(p[0], WithinAbs(0.6, 1e-15));
    CHECK_THAT(p[1], WithinAbs(0.8, 1e-15));
    CHECK(project({0.0, 0.0}, b) == std::vector<double>{0.0, 0.0});
    FeasibleBall shifted;
    shifted.center = {5.0, -2.0};
    shifted.radius = 1.5;
    const auto q = project({8.0, -2.0}, shifted);
    CHECK_THAT(q[0], WithinAbs(6.5, 1e-12));
    CHECK_THAT(q[1], WithinAbs(-2.0, 1e-12));
  }
  SECTION("interior points come back untouched") {
    const std::vector<double> p{0.3, -0.4};
    CHECK(project(p, b) == p);
  }
  SECTION("result is always feasible and idempotent") {
    Rng rng(701);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> p{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
      const auto q = project(p, b);
      REQUIRE(b.contains(q));
      REQUIRE(project(q, b) == q);
    }
  }
  SECTION("non-expansive") {
    Rng rng(702);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> p{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
      std::vector<double> q{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
      const auto pp = project(p, b);
      const auto pq = project(q, b);
      const double before = std::hypot(p[0] - q[0], p[1] - q[1]);
      const double after = std::hypot(pp[0] - pq[0], pp[1] - pq[1]);
      REQUIRE(after <= before + 1e-12);
    }
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(project({1.0}, b), ValidationError);
    CHECK_THROWS_AS(project({1.0, std::nan("")}, b), ValidationError);
    FeasibleBall bad;
    bad.center = {0.0};
    bad.radius = 0.0;
    CHECK_THROWS_AS(project({1.0}, bad), ValidationError);
  }
}

TEST_CASE("loss round validation", "[oco]") {
  auto r = quad_round({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}});
  CHECK_NOTHROW(r.validate(2));
  SECTION("weights live in [0, 1], zero included") {
    r.weight = 0.0;
    CHECK_NOTHROW(r.validate(2));
    r.weight = -0.1;
    CHECK_THROWS_AS(r.validate(2), ValidationError);
    r.weight = 1.1;
    CHECK_THROWS_AS(r.validate(2), ValidationError);
  }
  SECTION("quadratic shape checks") {
    auto bad = quad_round({0.0, 0.0}, {{1.0, 0.5}, {-0.5, 1.0}});
    CHECK_THROWS_AS(bad.validate(2), ValidationError);  // asymmetric
    auto neg = quad_round({0.0, 0.0}, {{-1.0, 0.0}, {0.0, 1.0}});
    CHECK_THROWS_AS(neg.validate(2), ValidationError);  // negative diagonal
    CHECK_THROWS_AS(r.validate(3), ValidationError);    // dimension mismatch
  }
  SECTION("logistic labels are strict") {
    auto l = logi_round({1.0, 0.0}, 1.0);
    CHECK_NOTHROW(l.validate(2));
    l.y = 0.5;
    CHECK_THROWS_AS(l.validate(2), ValidationError);
  }
  SECTION("stream validation names the offending round") {
    ConvexLossStream s;
    s.ball = ball2(1.0);
    s.rounds.push_back(quad_round({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}));
    s.rounds.push_back(logi_round({1.0, 0.0}, 0.3));
    CHECK_THROWS_WITH(s.validate(),
                      Catch::Matchers::ContainsSubstring("round 1"));
  }
}

TEST_CASE("loss gradients match finite differences", "[oco]") {
  Rng rng(703);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> theta{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const auto check = [&](const LossRound& r) {
      auto f = [&](const std::vector<double>& p) { return r.eval(p); };
      const auto fd = oracle::central_fd(f, theta, 1e-6);
      const auto g = r.grad(theta);
      for (std::size_t i = 0; i < 2; ++i)
        REQUIRE_THAT(g[i], WithinAbs(fd[i], 1e-5 * (1.0 + std::fabs(g[i]))));
    };
    check(quad_round({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)},
                     {{1.2, 0.3}, {0.3, 0.9}}));
    check(logi_round({rng.normal(), rng.normal()},
                     rng.uniform() < 0.5 ? -1.0 : 1.0));
    // keep the absolute round away from its kink
    auto a = abs_round({1.0, 2.0}, 5.0);
    if (std::fabs(detail::dot(a.x, theta) - a.y) > 0.1) check(a);
  }
}

TEST_CASE("lipschitz constants bound gradients over the ball", "[oco]") {
  Rng rng(704);
  const FeasibleBall b = ball2(2.0);
  const auto q = quad_round({0.5, -0.3}, {{1.5, 0.4}, {0.4, 0.8}});
  const auto l = logi_round({1.1, -0.7}, 1.0);
  const double gq = q.lipschitz(b);
  const double gl = l.lipschitz(b);
  CHECK_THAT(gl, WithinAbs(std::sqrt(1.1 * 1.1 + 0.49), 1e-12));
  for (int rep = 0; rep < 200; ++rep) {
    // random point inside the ball
    std::vector<double> p{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    p = project(p, b);
    CHECK(detail::norm2(q.grad(p)) <= gq + 1e-9);
    CHECK(detail::norm2(l.grad(p)) <= gl + 1e-9);
  }
}

TEST_CASE("regret bound worked examples", "[oco]") {
  CHECK(regret_bound(2.0, 1.0, 1.0, {1.0, 1.0}) == 3.0);
  CHECK(regret_bound(2.0, 1.0, 1.0, {0.0, 0.0}) == 2.0);  // D^2 / (2 eta)
  CHECK_THAT(regret_bound(1.0, 2.0, 0.1, {0.5, 0.5, 0.5}),
             WithinAbs(5.15, 1e-12));
  CHECK_THROWS_AS(regret_bound(0.0, 1.0, 1.0, {1.0}), ValidationError);
  CHECK_THROWS_AS(regret_bound(1.0, -1.0, 1.0, {1.0}), ValidationError);
  CHECK_THROWS_AS(regret_bound(1.0, 1.0, 0.0, {1.0}), ValidationError);
}

TEST_CASE("single quadratic step lands on the minimizer", "[oco]") {
  // l(theta) = theta^2 from theta_0 = 1 with eta = 0.5: exact one-step solve
  ConvexLossStream s;
  s.ball.center = {0.0};
  s.ball.radius = 10.0;
  s.rounds.push_back(quad_round({0.0}, {{1.0}}));
  s.rounds.push_back(quad_round({0.0}, {{1.0}}));
  const std::vector<double> theta0{1.0};
  const auto trace = run_weighted_ogd(
      s, [](std::size_t) { return 0.5; }, &theta0, false);
  REQUIRE(trace.params.size() == 2);
  CHECK(trace.params[0] == std::vector<double>{1.0});
  CHECK(trace.params[1] == std::vector<double>{0.0});
  CHECK(trace.losses[0] == 1.0);
  CHECK(trace.losses[1] == 0.0);
}

TEST_CASE("zero weights freeze the iterate", "[oco]") {
  Rng rng(705);
  ConvexLossStream s;
  s.ball = ball2(3.0);
  for (int t = 0; t < 12; ++t) {
    auto r = quad_round({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)},
                        {{1.0, 0.0}, {0.0, 1.0}}, 0.0);
    s.rounds.push_back(r);
  }
  const auto trace = run_weighted_ogd(s, nullptr, nullptr, false);
  for (const auto& p : trace.params)
    CHECK(p == s.ball.center);
}

TEST_CASE("ogd trajectory matches an independent replay", "[oco]") {
  // Quadratic rounds with targets well inside the ball keep the trajectory
  // interior, so the replay never needs the projection's edge handling.
  Rng rng(706);
  ConvexLossStream s;
  s.ball = ball2(3.0);
  for (int t = 0; t < 100; ++t) {
    auto r = quad_round({rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)},
                        {{1.0, 0.0}, {0.0, 1.0}}, rng.uniform(0.2, 1.0));
    s.rounds.push_back(r);
  }
  const auto trace = run_weighted_ogd(s);

  // replay with the recorded step sizes and own arithmetic
  std::vector<double> theta{0.0, 0.0};
  double cum = 0.0, cum_opt = 0.0;
  for (std::size_t t = 0; t < 100; ++t) {
    for (std::size_t i = 0; i < 2; ++i) {
      INFO("round " << t << " coord " << i);
      REQUIRE(trace.params[t][i] == theta[i]);
      REQUIRE(std::hypot(theta[0], theta[1]) < 2.9);  // stays interior
    }
    const auto& r = s.rounds[t];
    double loss = 0.0;
    std::vector<double> g(2, 0.0);
    for (std::size_t i = 0; i < 2; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 2; ++j) row += r.q[i][j] * (theta[j] - r.a[j]);
      loss += (theta[i] - r.a[i]) * row;
      for (std::size_t j = 0; j < 2; ++j)
        g[i] += 2.0 * r.q[i][j] * (theta[j] - r.a[j]);
    }
    cum += loss;
    double opt_loss = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < 2; ++j)
        row += r.q[i][j] * (trace.optimum[j] - r.a[j]);
      opt_loss += (trace.optimum[i] - r.a[i]) * row;
    }
    cum_opt += opt_loss;
    CHECK_THAT(trace.cum_regret[t], WithinAbs(cum - cum_opt, 1e-9));
    for (std::size_t i = 0; i < 2; ++i)
      theta[i] -= trace.step_sizes[t] * r.weight * g[i];
  }
  CHECK_THAT(trace.regret, WithinAbs(cum - cum_opt, 1e-9));
  CHECK(trace.regret <= trace.bound);
}

TEST_CASE("halving weights and doubling steps is the same run", "[oco]") {
  Rng rng(707);
  ConvexLossStream s;
  s.ball = ball2(3.0);
  for (int t = 0; t < 40; ++t)
    s.rounds.push_back(
        quad_round({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)},
                   {{1.0, 0.2}, {0.2, 1.0}}, rng.uniform(0.1, 1.0)));
  ConvexLossStream half = s;
  for (auto& r : half.rounds) r.weight *= 0.5;

  const double d = s.ball.diameter();
  const double g = s.lipschitz();
  StepSchedule base = inv_sqrt_schedule(d, g);
  StepSchedule doubled = [base](std::size_t t) { return 2.0 * base(t); };
  const auto a = run_weighted_ogd(s, base, nullptr, false);
  const auto b = run_weighted_ogd(half, doubled, nullptr, false);
  REQUIRE(a.params.size() == b.params.size());
  for (std::size_t t = 0; t < a.params.size(); ++t)
    CHECK(a.params[t] == b.params[t]);
}

TEST_CASE("hindsight optimum on hand-solvable streams", "[oco]") {
  SECTION("two opposing quadratics meet in the middle") {
    ConvexLossStream s;
    s.ball.center = {0.0};
    s.ball.radius = 10.0;
    s.rounds.push_back(quad_round({1.0}, {{1.0}}));
    s.rounds.push_back(quad_round({-1.0}, {{1.0}}));
    const auto opt = hindsight_optimum(s, 2);
    CHECK_THAT(opt[0], WithinAbs(0.0, 1e-8));
    const double total = s.rounds[0].eval(opt) + s.rounds[1].eval(opt);
    CHECK_THAT(total, WithinAbs(2.0, 1e-12));
  }
  SECTION("unconstrained minimizer outside the ball projects to the rim") {
    ConvexLossStream s;
    s.ball = ball2(1.0);
    s.rounds.push_back(quad_round({3.0, 4.0}, {{1.0, 0.0}, {0.0, 1.0}}));
    const auto opt = hindsight_optimum(s, 1);
    CHECK_THAT(opt[0], WithinAbs(0.6, 1e-6));
    CHECK_THAT(opt[1], WithinAbs(0.8, 1e-6));
  }
  SECTION("bad prefix is rejected") {
    ConvexLossStream s;
    s.ball = ball2(1.0);
    s.rounds.push_back(quad_round({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}));
    CHECK_THROWS_AS(hindsight_optimum(s, 0), ValidationError);
    CHECK_THROWS_AS(hindsight_optimum(s, 2), ValidationError);
  }
}

TEST_CASE("hindsight optimum agrees with dense grid search", "[oco]") {
  StreamGenSpec spec;
  spec.seed = 2024;
  spec.rounds = 20;
  spec.dim = 2;
  spec.families = {LossFamily::logistic};
  spec.radius = 2.0;
  const auto s = generate_stream(spec);
  const auto opt = hindsight_optimum(s, 20);
  const auto grid = grid_min2d(s, 20);
  double f_opt = 0.0, f_grid = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    f_opt += s.rounds[t].eval(opt);
    f_grid += s.rounds[t].eval(grid);
  }
  CHECK_THAT(f_opt, WithinAbs(f_grid, 1e-6));
}

TEST_CASE("warm-started hindsight lands on the same value", "[oco]") {
  StreamGenSpec spec;
  spec.seed = 2025;
  spec.rounds = 30;
  spec.dim = 2;
  spec.families = {LossFamily::quadratic, LossFamily::logistic};
  spec.radius = 3.0;
  const auto s = generate_stream(spec);
  const auto cold = hindsight_optimum(s, 30);
  const std::vector<double> far{2.9, 0.0};
  const auto warm = hindsight_optimum(s, 30, 1e-10, 200000, &far);
  double f_cold = 0.0, f_warm = 0.0;
  for (std::size_t t = 0; t < 30; ++t) {
    f_cold += s.rounds[t].eval(cold);
    f_warm += s.rounds[t].eval(warm);
  }
  CHECK_THAT(f_cold, WithinAbs(f_warm, 1e-9));
}

TEST_CASE("nonsmooth streams fail loudly instead of stalling", "[oco]") {
  Rng rng(708);
  ConvexLossStream s;
  s.ball = ball2(2.0);
  for (int t = 0; t < 3; ++t)
    s.rounds.push_back(abs_round({rng.normal(), rng.normal()},
                                 rng.uniform(-1.0, 1.0)));
  CHECK_THROWS_AS(hindsight_optimum(s, 3, 1e-10, 2000), NumericError);
}

TEST_CASE("regret within bound on generated streams", "[oco]") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    StreamGenSpec spec;
    spec.seed = seed;
    spec.rounds = 200;
    spec.dim = 2;
    spec.families = {LossFamily::quadratic, LossFamily::logistic};
    spec.radius = 3.0;
    const auto s = generate_stream(spec);
    const auto trace = run_weighted_ogd(s);
    INFO("seed " << seed);
    CHECK(trace.regret <= trace.bound);
    // bound curve is evaluated at every prefix
    REQUIRE(trace.bound_curve.size() == 200);
    CHECK(trace.bound == trace.bound_curve.back());
    for (std::size_t t = 0; t < 200; ++t)
      CHECK(trace.cum_regret[t] <= trace.bound_curve[t]);
  }
}

TEST_CASE("ogd input validation", "[oco]") {
  ConvexLossStream s;
  s.ball = ball2(1.0);
  s.rounds.push_back(quad_round({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}));
  const std::vector<double> outside{5.0, 0.0};
  CHECK_THROWS_AS(run_weighted_ogd(s, nullptr, &outside), ValidationError);
  const std::vector<double> wrong_dim{0.0};
  CHECK_THROWS_AS(run_weighted_ogd(s, nullptr, &wrong_dim), ValidationError);
  CHECK_THROWS_AS(
      run_weighted_ogd(s, [](std::size_t) { return 0.0; }, nullptr),
      ValidationError);
  ConvexLossStream empty;
  empty.ball = ball2(1.0);
  CHECK_THROWS_AS(run_weighted_ogd(empty), ValidationError);
}

TEST_CASE("inverse square-root schedule", "[oco]") {
  const auto eta = inv_sqrt_schedule(2.0, 4.0);
  CHECK(eta(1) == 0.5);
  CHECK(eta(4) == 0.25);
  CHECK_THROWS_AS(inv_sqrt_schedule(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(inv_sqrt_schedule(1.0, 0.0), ValidationError);
}

TEST_CASE("regret slope fits", "[oco]") {
  SECTION("square-root growth") {
    const auto fit = regret_slope({{4.0, 2.0}, {16.0, 4.0}, {64.0, 8.0}});
    CHECK_THAT(fit.slope, WithinAbs(0.5, 1e-12));
    CHECK(fit.used == 3);
    CHECK(fit.excluded == 0);
  }
  SECTION("linear growth") {
    const auto fit =
        regret_slope({{10.0, 3.0}, {100.0, 30.0}, {1000.0, 300.0}});
    CHECK_THAT(fit.slope, WithinAbs(1.0, 1e-12));
  }
  SECTION("non-positive regrets are dropped and counted") {
    const auto fit = regret_slope({{10.0, -1.0}, {100.0, 5.0}, {1000.0, 50.0}});
    CHECK_THAT(fit.slope, WithinAbs(1.0, 1e-12));
    CHECK(fit.used == 2);
    CHECK(fit.excluded == 1);
  }
  SECTION("degenerate inputs are rejected") {
    CHECK_THROWS_AS(regret_slope({{10.0, 1.0}, {10.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(regret_slope({{10.0, 1.0}, {100.0, -2.0}}),
                    ValidationError);
    CHECK_THROWS_AS(regret_slope({{0.0, 1.0}, {100.0, 2.0}}), ValidationError);
  }
}

TEST_CASE("generated streams are deterministic and well formed", "[oco]") {
  StreamGenSpec spec;
  spec.seed = 99;
  spec.rounds = 30;
  spec.dim = 3;
  spec.families = {LossFamily::quadratic, LossFamily::logistic};
  spec.radius = 3.0;
  const auto s1 = generate_stream(spec);
  const auto s2 = generate_stream(spec);
  REQUIRE(s1.rounds.size() == 30);
  CHECK_NOTHROW(s1.validate());
  for (std::size_t t = 0; t < 30; ++t) {
    CHECK(s1.rounds[t].family ==
          (t % 2 == 0 ? LossFamily::quadratic : LossFamily::logistic));
    CHECK(s1.rounds[t].weight > 0.0);
    CHECK(s1.rounds[t].weight <= 1.0);
    CHECK(s1.rounds[t].a == s2.rounds[t].a);
    CHECK(s1.rounds[t].q == s2.rounds[t].q);
    CHECK(s1.rounds[t].x == s2.rounds[t].x);
    CHECK(s1.rounds[t].y == s2.rounds[t].y);
    CHECK(s1.rounds[t].weight == s2.rounds[t].weight);
  }
  SECTION("spec validation") {
    StreamGenSpec bad = spec;
    bad.rounds = 0;
    CHECK_THROWS_AS(generate_stream(bad), ValidationError);
    bad = spec;
    bad.dim = 0;
    CHECK_THROWS_AS(generate_stream(bad), ValidationError);
    bad = spec;
    bad.families.clear();
    CHECK_THROWS_AS(generate_stream(bad), ValidationError);
    bad = spec;
    bad.center = {0.0};  // wrong length for dim 3
    CHECK_THROWS_AS(generate_stream(bad), ValidationError);
  }
}

TEST_CASE("attach_hindsight validates the trace length", "[oco]") {
  ConvexLossStream s;
  s.ball = ball2(1.0);
  s.rounds.push_back(quad_round({0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}));
  RegretTrace empty;
  CHECK_THROWS_AS(attach_hindsight(empty, s, {0.0, 0.0}), ValidationError);
}
