#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "spdelab/estimators.hpp"
#include "spdelab/gaussian_field.hpp"

using namespace spdelab;

namespace {

struct OwnedGrid {
  std::vector<double> ts, xs, vals;
  GridView view() const { return {ts, xs, vals}; }
};

OwnedGrid constant_grid(double c) {
  // resolution floor: max((2e-4)^(1/4), sqrt(2*0.01)) = 0.1414
  OwnedGrid g;
  for (int i = 0; i < 20; ++i) g.ts.push_back(0.4 + i * 1e-4);
  for (int j = 0; j < 20; ++j) g.xs.push_back(0.3 + j * 0.01);
  g.vals.assign(400, c);
  return g;
}

OwnedGrid sampled_grid(const EigenSystem& es, std::uint64_t seed, std::uint64_t rep,
                       int nt = 24, int nx = 24) {
  // resolution floor: max((4e-4)^(1/4), sqrt(2*0.3/nx)) = 0.158 at nx = 24
  OwnedGrid g;
  for (int i = 0; i < nt; ++i) g.ts.push_back(0.4 + i * 2e-4);
  for (int j = 0; j < nx; ++j) g.xs.push_back(0.35 + j * 0.3 / nx);
  const FieldPath p = sample_w(es, es.count, g.ts, g.xs, seed, rep, false);
  g.vals = p.values;
  return g;
}

}  // namespace

TEST_CASE("modulus normalizer guards") {
  // at coarse rho the iterated log is clamped to keep the normalizer >= rho
  CHECK(modulus_normalizer(0.9, Normalizer::LogLog) >= 0.9);
  CHECK(modulus_normalizer(0.9, Normalizer::Log) >= 0.9);
  // far below the guard the plain formulas apply
  const double r = 1e-4;
  CHECK(modulus_normalizer(r, Normalizer::LogLog) ==
        doctest::Approx(r * std::sqrt(std::log(std::log(1.0 / r)))));
  CHECK(modulus_normalizer(r, Normalizer::Log) ==
        doctest::Approx(r * std::sqrt(std::log(1.0 / r))));
}

TEST_CASE("constant paths give zero statistics") {
  const OwnedGrid g = constant_grid(3.7);
  const std::vector<double> ladder{0.25, 0.18, 0.145};
  for (double v : local_modulus_path(g.view(), 10, 10, ladder, Normalizer::LogLog))
    CHECK(v == 0.0);
  for (double v : uniform_modulus_path(g.view(), ladder, Normalizer::Log))
    CHECK(v == 0.0);
  for (double v : chung_path(g.view(), 10, 10, ladder)) CHECK(v == 0.0);
}

TEST_CASE("sup statistics are monotone in the ladder") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  const std::vector<double> ladder{0.3, 0.22, 0.16};
  for (int rep = 0; rep < 5; ++rep) {
    const OwnedGrid g = sampled_grid(es, 33, static_cast<std::uint64_t>(rep));
    const std::vector<double> plain =
        local_modulus_path(g.view(), 12, 12, ladder, Normalizer::None);
    for (std::size_t k = 1; k < plain.size(); ++k) CHECK(plain[k] <= plain[k - 1]);
    const std::vector<double> ch = chung_path(g.view(), 12, 12, ladder);
    for (std::size_t k = 1; k < ch.size(); ++k) CHECK(ch[k] <= ch[k - 1]);
  }
}

TEST_CASE("uniform sup dominates the local sup at the same normalizer") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  const std::vector<double> ladder{0.3, 0.22, 0.16};
  for (int rep = 0; rep < 10; ++rep) {
    const OwnedGrid g = sampled_grid(es, 55, static_cast<std::uint64_t>(rep));
    const std::vector<double> uni =
        uniform_modulus_path(g.view(), ladder, Normalizer::Log);
    const std::vector<double> loc =
        local_modulus_path(g.view(), 12, 12, ladder, Normalizer::Log);
    for (std::size_t k = 0; k < ladder.size(); ++k) CHECK(uni[k] >= loc[k]);
  }
}

TEST_CASE("statistics are invariant under path relabeling") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 48);
  const std::vector<double> ladder{0.3, 0.2};
  std::vector<std::vector<double>> stats;
  for (int rep = 0; rep < 8; ++rep) {
    const OwnedGrid g = sampled_grid(es, 77, static_cast<std::uint64_t>(rep));
    stats.push_back(local_modulus_path(g.view(), 10, 10, ladder, Normalizer::LogLog));
  }
  ModulusStatistic fwd = aggregate_modulus(stats, ladder, Normalizer::LogLog);
  std::reverse(stats.begin(), stats.end());
  ModulusStatistic rev = aggregate_modulus(stats, ladder, Normalizer::LogLog);
  for (std::size_t k = 0; k < ladder.size(); ++k)
    CHECK(fwd.medians[k] == rev.medians[k]);
}

TEST_CASE("ball sup and small-ball bookkeeping") {
  std::vector<double> sups;
  for (int i = 0; i < 2000; ++i) sups.push_back(0.001 * (i + 1));  // 0.001..2.0
  const std::vector<double> eps{2.5, 1.0, 0.5, 0.0005};
  const SmallBallEstimate sb = small_ball_estimate(sups, 0.4, eps);
  CHECK(sb.p_hat[0] == 1.0);   // threshold above the range
  CHECK(sb.p_hat[1] == 0.5);
  CHECK(sb.p_hat[2] == 0.25);
  CHECK(sb.p_hat[3] == 0.0);
  // p=0 and p=1 rungs are flagged for exclusion from fits
  REQUIRE(sb.excluded.size() == 2);
  CHECK(sb.excluded[0] == 0);
  CHECK(sb.excluded[1] == 3);
  CHECK(sb.intervals[1].lo < 0.5);
  CHECK(sb.intervals[1].hi > 0.5);
}

TEST_CASE("wilson intervals cover a known Bernoulli p") {
  RngStream rng = RngStream::keyed(13, 1);
  // exact Wilson coverage at (p, n) = (0.3, 500) is 0.9547, comfortably
  // above the 94% gate even with Monte Carlo wobble
  const double p = 0.3;
  const int trials = 1000, n = 500;
  int covered = 0;
  for (int t = 0; t < trials; ++t) {
    int k = 0;
    for (int i = 0; i < n; ++i)
      if (rng.uniform() < p) ++k;
    const WilsonInterval ci = wilson(k, n, 1.959963984540054);
    if (ci.lo <= p && p <= ci.hi) ++covered;
  }
  CHECK(covered >= 940);
}

TEST_CASE("fit_exponent on exact and noisy power laws") {
  SUBCASE("y = x^2 exactly") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 8; ++i) {
      const double x = std::pow(10.0, -3.0 + i * 0.4);
      xs.push_back(x);
      ys.push_back(x * x);
    }
    const ExponentFit fit = fit_exponent(xs, ys);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("y = 3 x^1.5 with 1% multiplicative noise") {
    RngStream rng = RngStream::keyed(4, 4);
    std::vector<double> xs, ys;
    for (int i = 0; i < 12; ++i) {
      const double x = std::pow(10.0, -2.0 + i * 0.2);
      xs.push_back(x);
      ys.push_back(3.0 * std::pow(x, 1.5) * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0)));
    }
    const ExponentFit fit = fit_exponent(xs, ys);
    CHECK(fit.slope == doctest::Approx(1.5).epsilon(0.033));
  }
  SUBCASE("span and count preconditions") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 5.0};
    const std::vector<double> ys{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK_THROWS_AS(fit_exponent(xs, ys), std::invalid_argument);  // < 1 decade
    const std::vector<double> few{1.0, 10.0};
    CHECK_THROWS_AS(fit_exponent(few, few), std::invalid_argument);
  }
}

TEST_CASE("gaussian moment identity ||w||_4 / ||w||_2 = 3^(1/4)") {
  RngStream rng = RngStream::keyed(6, 0);
  const int n = 60000;
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (double& v : vals) v = 1.7 * rng.normal();
  const std::vector<int> ks{2, 4};
  const std::vector<double> norms = moment_norms(vals, ks);
  const double ratio = norms[1] / norms[0];
  // batch-split standard error of the ratio
  const int nb = 10;
  std::vector<double> batch_ratios;
  for (int b = 0; b < nb; ++b) {
    std::vector<double> chunk(vals.begin() + b * n / nb, vals.begin() + (b + 1) * n / nb);
    const std::vector<double> bn = moment_norms(chunk, ks);
    batch_ratios.push_back(bn[1] / bn[0]);
  }
  double mean = 0;
  for (double r : batch_ratios) mean += r;
  mean /= nb;
  double var = 0;
  for (double r : batch_ratios) var += (r - mean) * (r - mean);
  const double se = std::sqrt(var / (nb - 1) / nb);
  CHECK(std::abs(ratio - std::pow(3.0, 0.25)) < 3.0 * se + 1e-3);
}

TEST_CASE("moment_norms edge cases") {
  std::vector<double> constant(5000, 2.5);
  const std::vector<int> ks{2, 4, 8};
  for (double v : moment_norms(constant, ks))
    CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
  const std::vector<int> big{9};
  CHECK_THROWS_AS(moment_norms(constant, big), std::invalid_argument);
}

TEST_CASE("exceptional scan fractions") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  const OwnedGrid g = sampled_grid(es, 21, 3);
  const double eps = 0.2;
  const std::vector<double> uni =
      uniform_modulus_path(g.view(), std::vector<double>{eps}, Normalizer::Log);
  const std::vector<double> thetas{0.0, 0.5 * uni[0], uni[0] + 1e-9};
  const std::vector<double> frac = exceptional_scan_path(g.view(), eps, thetas, {});
  CHECK(frac[0] == 1.0);                       // theta = 0: every point exceeds
  for (std::size_t q = 1; q < frac.size(); ++q) CHECK(frac[q] <= frac[q - 1]);
  CHECK(frac[2] == 0.0);  // above the uniform constant: exactly none
}

TEST_CASE("small-ball ratio-only scaling on sampled fields") {
  // p_hat depends on (r, eps) through r/eps only, checked at two radii
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 96);
  const double ratio = 1.6;
  const int reps = 800;
  auto run = [&](double r) {
    std::vector<double> sups;
    OwnedGrid g;
    const int nt = 40, nx = 16;
    for (int i = 0; i < nt; ++i)
      g.ts.push_back(0.4 - r * r * r * r + 2.0 * r * r * r * r * i / (nt - 1));
    for (int j = 0; j < nx; ++j)
      g.xs.push_back(0.5 - r * r + 2.0 * r * r * j / (nx - 1));
    for (int rep = 0; rep < reps; ++rep) {
      const FieldPath p =
          sample_w(es, 96, g.ts, g.xs, 66, static_cast<std::uint64_t>(rep), false);
      g.vals = p.values;
      sups.push_back(ball_sup_path(g.view(), nt / 2, nx / 2, r));
    }
    std::int64_t k = 0;
    for (double s : sups)
      if (s <= r / ratio) ++k;
    return wilson(k, reps);
  };
  const WilsonInterval a = run(0.30);
  const WilsonInterval b = run(0.42);
  // joint confidence intervals overlap
  CHECK(a.lo <= b.hi);
  CHECK(b.lo <= a.hi);
}

TEST_CASE("modulus statistics are ladder-stable on sampled fields") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 96);
  // smallest rung respects the resolution rule: eps >= 2 grid cells in
  // rho-units, here max((2*2e-4)^(1/4), (2*0.0133)^(1/2)) = 0.163
  const std::vector<double> ladder{0.3, 0.22, 0.16};
  std::vector<std::vector<double>> uni_rows, loc_rows;
  for (int rep = 0; rep < 100; ++rep) {
    const OwnedGrid g = sampled_grid(es, 404, static_cast<std::uint64_t>(rep), 30, 30);
    uni_rows.push_back(uniform_modulus_path(g.view(), ladder, Normalizer::Log));
    loc_rows.push_back(local_modulus_path(g.view(), 15, 15, ladder, Normalizer::LogLog));
  }
  const ModulusStatistic uni = aggregate_modulus(uni_rows, ladder, Normalizer::Log);
  const ModulusStatistic loc = aggregate_modulus(loc_rows, ladder, Normalizer::LogLog);
  // across-ladder drift of the medians < 20% between adjacent rungs
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    CHECK(uni.medians[k] > 0.0);
    CHECK(std::abs(uni.medians[k] / uni.medians[k - 1] - 1.0) < 0.2);
  }
  // across-seed median varies < 20% between the two smallest local rungs
  CHECK(std::abs(loc.medians[2] / loc.medians[1] - 1.0) < 0.2);
}

TEST_CASE("chung statistic on sampled fields: positive, finite, concentrated") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 96);
  const std::vector<double> ladder{0.3, 0.21, 0.15};
  std::vector<double> stats;
  for (int rep = 0; rep < 200; ++rep) {
    const OwnedGrid g = sampled_grid(es, 505, static_cast<std::uint64_t>(rep), 30, 30);
    stats.push_back(chung_path(g.view(), 15, 15, ladder).back());
  }
  std::vector<double> copy(stats);
  const double med = median(copy);
  const double iqr = quantile(stats, 0.75) - quantile(stats, 0.25);
  CHECK(med > 0.0);
  CHECK(std::isfinite(med));
  CHECK(iqr / med < 1.0);
}
