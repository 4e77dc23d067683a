#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fossil/common.hpp"

namespace fossil {

// ============================================================
// Special functions (series / continued fractions)
// ============================================================

namespace detail {

inline double gammln(double x) {
  // Lanczos approximation, g = 5, n = 6; accurate to ~1e-15 for x > 0.
  static const double cof[6] = {76.18009172947146,     -86.50532032941677,
                                24.01409824083091,     -1.231739572450155,
                                0.1208650973866179e-2, -0.5395239384953e-5};
  double y = x;
  double tmp = x + 5.5;
  tmp -= (x + 0.5) * std::log(tmp);
  double ser = 1.000000000190015;
  for (int j = 0; j < 6; ++j) ser += cof[j] / ++y;
  return -tmp + std::log(2.5066282746310005 * ser / x);
}

inline double gamma_p_series(double a, double x) {
  // P(a,x) by series; converges fast for x < a+1.
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16)
      return sum * std::exp(-x + a * std::log(x) - gammln(a));
  }
  throw NumericError("incomplete gamma series failed to converge");
}

inline double gamma_q_cf(double a, double x) {
  // Q(a,x) by modified Lentz continued fraction; for x >= a+1.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16)
      return std::exp(-x + a * std::log(x) - gammln(a)) * h;
  }
  throw NumericError("incomplete gamma continued fraction failed to converge");
}

inline double beta_cf(double a, double b, double x) {
  // Continued fraction for the incomplete beta (modified Lentz).
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) return h;
  }
  throw NumericError("incomplete beta failed to converge");
}

}  // namespace detail

// Upper regularized incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0)
    throw ValidationError("gamma_q: requires a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Chi-squared survival function with k degrees of freedom.
inline double chi2_sf(double x, double k) {
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * k, 0.5 * x);
}

// Regularized incomplete beta I_x(a, b).
inline double beta_inc(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw ValidationError("beta_inc: requires a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt = std::exp(detail::gammln(a + b) - detail::gammln(a) -
                             detail::gammln(b) + a * std::log(x) +
                             b * std::log(1.0 - x));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::beta_cf(a, b, x) / a;
  return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

// Two-sided tail mass of the standard normal at |z|.
inline double normal_two_sided_p(double z) {
  return std::erfc(std::fabs(z) / 1.4142135623730950488);
}

// Two-sided Student t tail with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw ValidationError("student_t_two_sided_p: df must be > 0");
  return beta_inc(0.5 * df, 0.5, df / (df + t * t));
}

// ============================================================
// Ranking helpers
// ============================================================

struct RankInfo {
  std::vector<double> ranks;           // 1-based midranks, aligned to input
  std::vector<std::size_t> tie_sizes;  // sizes of tie groups (all groups)
};

inline void require_all_finite(const std::vector<double>& v,
                               const std::string& where) {
  for (double x : v)
    if (!std::isfinite(x))
      throw ValidationError(where + ": non-finite value in input");
}

// Average ranks for ties. Ties are exact floating-point equality; callers
// that want tolerance-based grouping must quantize first.
inline RankInfo midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  RankInfo info;
  info.ranks.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) info.ranks[order[t]] = avg;
    info.tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }
  return info;
}

inline double tie_cubic_sum(const std::vector<std::size_t>& tie_sizes) {
  double s = 0.0;
  for (std::size_t t : tie_sizes) {
    const double td = static_cast<double>(t);
    s += td * td * td - td;
  }
  return s;
}

inline double choose(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i)
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// ============================================================
// Test results
// ============================================================

struct TestResult {
  std::string method;   // "mann_whitney_u", "kruskal_wallis", ...
  double statistic = 0.0;
  double p_value = 1.0;
  bool exact = false;   // true when p came from full enumeration
  std::size_t n1 = 0;   // per-method: sizes, N, or pair count
  std::size_t n2 = 0;
};

// ============================================================
// Mann-Whitney U (rank-sum), two-sided
// ============================================================

namespace detail {

// Distribution of the doubled group-A rank sum over all C(N, n1) subsets of
// the pooled multiset. counts[j][s] = number of size-j subsets whose doubled
// midranks sum to s. Doubling makes every midrank an integer.
inline std::vector<std::vector<double>> rank_subset_counts(
    const std::vector<long long>& doubled, std::size_t n1) {
  long long total = 0;
  for (long long d : doubled) total += d;
  std::vector<std::vector<double>> counts(
      n1 + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
  counts[0][0] = 1.0;
  for (long long item : doubled) {
    // Descending j: row j-1 is read at step j before being written at j-1,
    // so each item is used at most once per subset.
    for (std::size_t j = n1; j >= 1; --j) {
      auto& row = counts[j];
      const auto& prev = counts[j - 1];
      for (long long s = total - item; s >= 0; --s) {
        if (prev[static_cast<std::size_t>(s)] != 0.0)
          row[static_cast<std::size_t>(s + item)] +=
              prev[static_cast<std::size_t>(s)];
      }
    }
  }
  return counts;
}

}  // namespace detail

// Two-sided Mann-Whitney U test. The statistic is U for sample a: the number
// of (a, b) pairs with a > b, counting ties as 1/2 (computed via midranks).
// Exact p for n1 + n2 <= 12 by enumeration over the permutation null
// (deviation form: P(|U' - n1 n2 / 2| >= |U - n1 n2 / 2|)); otherwise the
// normal approximation with tie correction and a 0.5 continuity correction.
inline TestResult mann_whitney_u(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw ValidationError("mann_whitney_u: both samples must be non-empty");
  require_all_finite(a, "mann_whitney_u");
  require_all_finite(b, "mann_whitney_u");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<double> pooled;
  pooled.reserve(n);
  pooled.insert(pooled.end(), a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const RankInfo ri = midranks(pooled);

  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ri.ranks[i];
  const double u = r1 - 0.5 * static_cast<double>(n1) *
                            static_cast<double>(n1 + 1);

  TestResult res;
  res.method = "mann_whitney_u";
  res.statistic = u;
  res.n1 = n1;
  res.n2 = n2;

  if (n <= 12) {
    // Integer arithmetic throughout: s = doubled rank sum, 2U = s - n1(n1+1),
    // deviation |2U - n1 n2| compared exactly.
    std::vector<long long> doubled(n);
    for (std::size_t i = 0; i < n; ++i)
      doubled[i] = static_cast<long long>(std::llround(2.0 * ri.ranks[i]));
    const auto counts = detail::rank_subset_counts(doubled, n1);
    const long long shift = static_cast<long long>(n1) *
                            static_cast<long long>(n1 + 1);
    const long long prod = static_cast<long long>(n1) *
                           static_cast<long long>(n2);
    const long long dev_obs =
        std::llabs(static_cast<long long>(std::llround(2.0 * r1)) - shift -
                   prod);
    double hits = 0.0, all = 0.0;
    const auto& row = counts[n1];
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] == 0.0) continue;
      all += row[s];
      const long long dev =
          std::llabs(static_cast<long long>(s) - shift - prod);
      if (dev >= dev_obs) hits += row[s];
    }
    res.p_value = hits / all;
    res.exact = true;
    return res;
  }

  const double nd = static_cast<double>(n);
  const double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n2);
  const double tie_term = tie_cubic_sum(ri.tie_sizes) / (nd * (nd - 1.0));
  const double var = (static_cast<double>(n1) * static_cast<double>(n2) /
                      12.0) *
                     ((nd + 1.0) - tie_term);
  if (var <= 0.0) {   // every pooled value identical
    res.p_value = 1.0;
    return res;
  }
  const double dev = std::max(0.0, std::fabs(u - mu) - 0.5);
  res.p_value = normal_two_sided_p(dev / std::sqrt(var));
  return res;
}

// ============================================================
// Kruskal-Wallis H
// ============================================================

// H with tie correction; p from the chi-squared approximation with k - 1
// degrees of freedom. All groups identical constants give H = 0, p = 1.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2)
    throw ValidationError("kruskal_wallis: needs at least 2 groups");
  std::size_t n = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty())
      throw ValidationError("kruskal_wallis: group " + std::to_string(g) +
                            " is empty");
    require_all_finite(groups[g], "kruskal_wallis");
    n += groups[g].size();
  }

  std::vector<double> pooled;
  pooled.reserve(n);
  for (const auto& g : groups) pooled.insert(pooled.end(), g.begin(), g.end());
  const RankInfo ri = midranks(pooled);

  const double nd = static_cast<double>(n);
  double h = 0.0;
  std::size_t off = 0;
  for (const auto& g : groups) {
    double rsum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rsum += ri.ranks[off + i];
    h += rsum * rsum / static_cast<double>(g.size());
    off += g.size();
  }
  h = 12.0 / (nd * (nd + 1.0)) * h - 3.0 * (nd + 1.0);

  const double correction =
      1.0 - tie_cubic_sum(ri.tie_sizes) / (nd * nd * nd - nd);

  TestResult res;
  res.method = "kruskal_wallis";
  res.n1 = n;
  res.n2 = groups.size();
  if (correction <= 0.0) {   // all values tied across every group
    res.statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }
  res.statistic = std::max(0.0, h / correction);
  res.p_value = chi2_sf(res.statistic,
                        static_cast<double>(groups.size()) - 1.0);
  return res;
}

// ============================================================
// Wilcoxon signed-rank, two-sided
// ============================================================

// Zero differences are dropped before ranking. The statistic is
// min(W+, W-). Exact p for <= 12 non-zero differences by enumeration over
// sign patterns (deviation form); otherwise normal approximation with tie
// correction and continuity correction.
inline TestResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
  require_all_finite(diffs, "wilcoxon_signed_rank");
  std::vector<double> d;
  d.reserve(diffs.size());
  for (double x : diffs)
    if (x != 0.0) d.push_back(x);
  const std::size_t dropped = diffs.size() - d.size();
  if (d.empty())
    throw DegenerateInputError(
        "wilcoxon_signed_rank: all differences are zero");

  const std::size_t m = d.size();
  std::vector<double> mags(m);
  for (std::size_t i = 0; i < m; ++i) mags[i] = std::fabs(d[i]);
  const RankInfo ri = midranks(mags);

  double w_neg = 0.0, w_pos = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    (d[i] < 0.0 ? w_neg : w_pos) += ri.ranks[i];

  TestResult res;
  res.method = "wilcoxon_signed_rank";
  res.statistic = std::min(w_pos, w_neg);
  res.n1 = m;
  res.n2 = dropped;

  if (m <= 12) {
    // Subset-sum distribution of the doubled negative-rank sum; every
    // doubled midrank is an integer so deviations compare exactly.
    std::vector<long long> t(m);
    long long total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      t[i] = static_cast<long long>(std::llround(2.0 * ri.ranks[i]));
      total += t[i];
    }
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    for (long long item : t)
      for (long long s = total - item; s >= 0; --s)
        if (counts[static_cast<std::size_t>(s)] != 0.0)
          counts[static_cast<std::size_t>(s + item)] +=
              counts[static_cast<std::size_t>(s)];
    // dev = |2s' - total| where s' = doubled negative-rank sum of a pattern.
    const long long s_obs = static_cast<long long>(std::llround(2.0 * w_neg));
    const long long dev_obs = std::llabs(2 * s_obs - total);
    double hits = 0.0, all = 0.0;
    for (std::size_t s = 0; s < counts.size(); ++s) {
      if (counts[s] == 0.0) continue;
      all += counts[s];
      if (std::llabs(2 * static_cast<long long>(s) - total) >= dev_obs)
        hits += counts[s];
    }
    res.p_value = hits / all;
    res.exact = true;
    return res;
  }

  const double md = static_cast<double>(m);
  const double mu = md * (md + 1.0) / 4.0;
  const double var =
      (md * (md + 1.0) * (2.0 * md + 1.0) - 0.5 * tie_cubic_sum(ri.tie_sizes)) /
      24.0;
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  const double dev = std::max(0.0, std::fabs(res.statistic - mu) - 0.5);
  res.p_value = normal_two_sided_p(dev / std::sqrt(var));
  return res;
}

// ============================================================
// Paired t-test, two-sided
// ============================================================

inline TestResult paired_t(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValidationError("paired_t: samples must be the same length");
  if (x.size() < 2)
    throw ValidationError("paired_t: needs at least 2 pairs");
  require_all_finite(x, "paired_t");
  require_all_finite(y, "paired_t");

  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0)
    throw DegenerateInputError("paired_t: zero variance of differences");

  TestResult res;
  res.method = "paired_t";
  res.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  res.p_value =
      student_t_two_sided_p(res.statistic, static_cast<double>(n - 1));
  res.n1 = n;
  res.n2 = n;
  return res;
}

}  // namespace fossil
