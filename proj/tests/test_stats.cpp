#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fossil/rng.hpp"
#include "fossil/stats.hpp"
#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using namespace fossil;

TEST_CASE("mann-whitney worked examples", "[stats]") {
  SECTION("fully separated samples") {
    const auto r = mann_whitney_u({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0});
    CHECK(r.statistic == 0.0);
    CHECK(r.exact);
    CHECK_THAT(r.p_value, WithinAbs(0.1, 1e-15));  // 2 / C(6,3)
    CHECK(r.n1 == 3);
    CHECK(r.n2 == 3);
  }
  SECTION("identical multisets") {
    const auto r = mann_whitney_u({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
    CHECK(r.p_value >= 0.99);
  }
  SECTION("empty input") {
    CHECK_THROWS_AS(mann_whitney_u({}, {1.0}), ValidationError);
    CHECK_THROWS_AS(mann_whitney_u({1.0}, {}), ValidationError);
  }
  SECTION("non-finite input") {
    CHECK_THROWS_AS(mann_whitney_u({std::nan("")}, {1.0}), ValidationError);
  }
}

TEST_CASE("mann-whitney U symmetry", "[stats]") {
  Rng rng(501);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n1 = static_cast<std::size_t>(rng.range(1, 8));
    const std::size_t n2 = static_cast<std::size_t>(rng.range(1, 8));
    std::vector<double> a(n1), b(n2);
    for (double& x : a) x = static_cast<double>(rng.range(0, 4));
    for (double& x : b) x = static_cast<double>(rng.range(0, 4));
    const auto ab = mann_whitney_u(a, b);
    const auto ba = mann_whitney_u(b, a);
    CHECK(ab.statistic + ba.statistic == static_cast<double>(n1 * n2));
    CHECK(ab.p_value == ba.p_value);
  }
}

TEST_CASE("mann-whitney is invariant to within-group order", "[stats]") {
  Rng rng(502);
  std::vector<double> a(7), b(5);
  for (double& x : a) x = static_cast<double>(rng.range(0, 3));
  for (double& x : b) x = static_cast<double>(rng.range(0, 3));
  const auto base = mann_whitney_u(a, b);
  for (int rep = 0; rep < 10; ++rep) {
    rng.shuffle(a);
    rng.shuffle(b);
    const auto r = mann_whitney_u(a, b);
    CHECK(r.statistic == base.statistic);
    CHECK(r.p_value == base.p_value);
  }
}

TEST_CASE("mann-whitney exact p matches enumeration", "[stats]") {
  Rng rng(503);
  for (std::size_t n1 = 1; n1 <= 5; ++n1) {
    for (std::size_t n2 = 1; n2 + n1 <= 9; ++n2) {
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<double> a(n1), b(n2);
        const bool ties = rep == 2;
        for (double& x : a)
          x = ties ? static_cast<double>(rng.range(0, 3)) : rng.uniform();
        for (double& x : b)
          x = ties ? static_cast<double>(rng.range(0, 3)) : rng.uniform();
        const auto got = mann_whitney_u(a, b);
        const auto want = oracle::mw_enumerate(a, b);
        INFO("n1 " << n1 << " n2 " << n2 << " rep " << rep);
        REQUIRE(got.exact);
        REQUIRE_THAT(got.statistic, WithinAbs(want.statistic, 1e-12));
        REQUIRE_THAT(got.p_value, WithinAbs(want.p, 1e-12));
      }
    }
  }
}

TEST_CASE("mann-whitney normal path", "[stats]") {
  SECTION("large separated samples give a tiny p") {
    std::vector<double> a(30), b(30);
    for (int i = 0; i < 30; ++i) {
      a[i] = static_cast<double>(i);
      b[i] = 100.0 + static_cast<double>(i);
    }
    const auto r = mann_whitney_u(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.p_value < 1e-10);
  }
  SECTION("all-tied pooled sample degenerates to p = 1") {
    const std::vector<double> a(9, 5.0), b(9, 5.0);
    const auto r = mann_whitney_u(a, b);
    CHECK_FALSE(r.exact);
    CHECK(r.p_value == 1.0);
  }
  SECTION("agrees with the reference normal formula") {
    Rng rng(504);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> a(10), b(10);
      for (double& x : a) x = rng.normal();
      for (double& x : b) x = rng.normal(0.5, 1.0);
      const auto r = mann_whitney_u(a, b);
      CHECK_THAT(r.p_value, WithinAbs(oracle::mw_normal_p(a, b), 1e-12));
    }
  }
}

TEST_CASE("wilcoxon signed-rank worked examples", "[stats]") {
  SECTION("all positive differences, n = 5") {
    const auto r = wilcoxon_signed_rank({1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK(r.statistic == 0.0);
    CHECK(r.exact);
    CHECK_THAT(r.p_value, WithinAbs(0.0625, 1e-15));  // 2 / 2^5
    CHECK(r.n1 == 5);
    CHECK(r.n2 == 0);
  }
  SECTION("perfectly balanced pair") {
    const auto r = wilcoxon_signed_rank({1.0, -1.0});
    CHECK(r.p_value == 1.0);
  }
  SECTION("zeros are dropped and counted") {
    const auto r = wilcoxon_signed_rank({0.0, 0.0, 1.0});
    CHECK(r.n1 == 1);
    CHECK(r.n2 == 2);
  }
  SECTION("all zeros or empty input is degenerate") {
    CHECK_THROWS_AS(wilcoxon_signed_rank({0.0, 0.0}), DegenerateInputError);
    CHECK_THROWS_AS(wilcoxon_signed_rank({}), DegenerateInputError);
  }
}

TEST_CASE("wilcoxon exact p matches enumeration", "[stats]") {
  Rng rng(505);
  SECTION("pinned mixed-sign case") {
    const std::vector<double> d{1.0, 2.0, 3.0, 4.0, 5.0, -6.0};
    const auto got = wilcoxon_signed_rank(d);
    const auto want = oracle::wilcoxon_enumerate(d);
    CHECK(got.exact);
    CHECK_THAT(got.statistic, WithinAbs(want.statistic, 1e-12));
    CHECK_THAT(got.p_value, WithinAbs(want.p, 1e-12));
  }
  SECTION("exhaustive sizes with and without ties") {
    for (std::size_t m = 1; m <= 8; ++m) {
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<double> d(m);
        const bool ties = rep >= 2;
        for (double& x : d) {
          const double mag =
              ties ? static_cast<double>(rng.range(1, 3)) : rng.uniform(0.1, 2.0);
          x = rng.uniform() < 0.5 ? mag : -mag;
        }
        const auto got = wilcoxon_signed_rank(d);
        const auto want = oracle::wilcoxon_enumerate(d);
        INFO("m " << m << " rep " << rep);
        REQUIRE(got.exact);
        REQUIRE_THAT(got.statistic, WithinAbs(want.statistic, 1e-12));
        REQUIRE_THAT(got.p_value, WithinAbs(want.p, 1e-12));
      }
    }
  }
}

TEST_CASE("wilcoxon normal path agrees with the reference formula", "[stats]") {
  Rng rng(506);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> d(20);
    for (double& x : d) x = rng.normal(0.3, 1.0);
    const auto r = wilcoxon_signed_rank(d);
    CHECK_FALSE(r.exact);
    CHECK_THAT(r.p_value, WithinAbs(oracle::wilcoxon_normal_p(d), 1e-12));
  }
}

TEST_CASE("kruskal-wallis", "[stats]") {
  SECTION("two tie-free groups reduce to the squared normal deviate") {
    Rng rng(507);
    for (int rep = 0; rep < 25; ++rep) {
      const std::size_t n1 = static_cast<std::size_t>(rng.range(3, 10));
      const std::size_t n2 = static_cast<std::size_t>(rng.range(3, 10));
      std::vector<double> a(n1), b(n2);
      for (double& x : a) x = rng.uniform();
      for (double& x : b) x = rng.uniform(0.2, 1.2);
      const auto kw = kruskal_wallis({a, b});
      // z from the U statistic without continuity correction
      const auto pooled_ranks = oracle::midranks([&] {
        std::vector<double> p(a);
        p.insert(p.end(), b.begin(), b.end());
        return p;
      }());
      double r1 = 0.0;
      for (std::size_t i = 0; i < n1; ++i) r1 += pooled_ranks[i];
      const double u = r1 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
      const double mu = static_cast<double>(n1 * n2) / 2.0;
      const double n = static_cast<double>(n1 + n2);
      const double var = static_cast<double>(n1 * n2) * (n + 1.0) / 12.0;
      const double z = (u - mu) / std::sqrt(var);
      INFO("rep " << rep);
      REQUIRE_THAT(kw.statistic, WithinAbs(z * z, 1e-9));
    }
  }
  SECTION("matches the direct tie-corrected formula") {
    Rng rng(508);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::vector<double>> groups(3);
      for (auto& g : groups) {
        g.resize(static_cast<std::size_t>(rng.range(3, 8)));
        for (double& x : g) x = static_cast<double>(rng.range(0, 6));
      }
      const auto kw = kruskal_wallis(groups);
      CHECK_THAT(kw.statistic, WithinAbs(oracle::kw_h(groups), 1e-9));
    }
  }
  SECTION("all observations tied") {
    const auto kw = kruskal_wallis({{3.0, 3.0}, {3.0, 3.0, 3.0}});
    CHECK(kw.statistic == 0.0);
    CHECK(kw.p_value == 1.0);
  }
  SECTION("validation") {
    CHECK_THROWS_AS(kruskal_wallis({{1.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(kruskal_wallis({{1.0}, {}}), ValidationError);
  }
}

TEST_CASE("paired t worked example", "[stats]") {
  const auto r = paired_t({2.0, 3.0, 4.0}, {1.0, 1.0, 1.0});
  CHECK_THAT(r.statistic, WithinAbs(3.4641016151377544, 1e-12));
  // closed form for df = 2: p = 1 - |t| / sqrt(2 + t^2)
  const double t = r.statistic;
  CHECK_THAT(r.p_value, WithinAbs(1.0 - t / std::sqrt(2.0 + t * t), 1e-12));
  CHECK_THAT(r.p_value, WithinAbs(0.0741799, 1e-6));
  CHECK(r.n1 == 3);
}

TEST_CASE("paired t df = 2 closed form on random data", "[stats]") {
  Rng rng(509);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x(3), y(3);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    const double d0 = x[0] - y[0], d1 = x[1] - y[1], d2 = x[2] - y[2];
    const double mean = (d0 + d1 + d2) / 3.0;
    if (std::fabs(d0 - mean) + std::fabs(d1 - mean) + std::fabs(d2 - mean) <
        1e-12)
      continue;
    const auto r = paired_t(x, y);
    const double t = std::fabs(r.statistic);
    CHECK_THAT(r.p_value, WithinAbs(1.0 - t / std::sqrt(2.0 + t * t), 1e-12));
  }
}

TEST_CASE("paired t degenerate and invalid input", "[stats]") {
  CHECK_THROWS_AS(paired_t({1.0, 2.0}, {1.0, 2.0}), DegenerateInputError);
  CHECK_THROWS_AS(paired_t({1.0, 2.0, 3.0}, {0.0, 1.0, 2.0}),
                  DegenerateInputError);  // constant shift, zero variance
  CHECK_THROWS_AS(paired_t({1.0}, {2.0}), ValidationError);
  CHECK_THROWS_AS(paired_t({1.0, 2.0}, {1.0}), ValidationError);
}

TEST_CASE("distribution helper sanity", "[stats]") {
  CHECK(chi2_sf(0.0, 1.0) == 1.0);
  // 95th percentiles from standard tables
  CHECK_THAT(chi2_sf(3.841458820694124, 1.0), WithinAbs(0.05, 1e-9));
  CHECK_THAT(chi2_sf(7.814727903251179, 3.0), WithinAbs(0.05, 1e-9));
  CHECK_THAT(normal_two_sided_p(1.959963984540054), WithinAbs(0.05, 1e-12));
  CHECK_THAT(normal_two_sided_p(0.0), WithinAbs(1.0, 1e-15));
  // t with df = 1 is Cauchy: p = 1 - (2 / pi) atan|t|
  CHECK_THAT(student_t_two_sided_p(1.0, 1.0), WithinAbs(0.5, 1e-9));
  CHECK_THAT(student_t_two_sided_p(0.0, 5.0), WithinAbs(1.0, 1e-12));
}
