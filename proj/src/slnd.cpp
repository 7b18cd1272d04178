#include "spdelab/slnd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spdelab {

void ConditioningSet::validate() const {
  if (points.size() > 1000)
    throw std::invalid_argument("ConditioningSet: capped at 1000 points (dense solve)");
  if (jitter < 0.0) throw std::invalid_argument("ConditioningSet: jitter must be >= 0");
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (rho(points[i], points[j]) <= 1e-12)
        throw std::invalid_argument("ConditioningSet: points " + std::to_string(i) +
                                    " and " + std::to_string(j) +
                                    " coincide in the parabolic metric");
}

ConditionalVarianceResult conditional_variance_detailed(
    const CovarianceOracle& oracle, const SpaceTimePoint& target,
    const ConditioningSet& cond) {
  cond.validate();
  const double L = oracle.eigensystem().bc.length;
  if (target.t < 0.0 || target.x < 0.0 || target.x > L)
    throw std::domain_error("conditional_variance: target outside the domain");

  const double var_z = oracle.variance(target);
  const std::size_t m = cond.points.size();
  if (m == 0) return {var_z, 0.0};

  Eigen::MatrixXd sigma(m, m);
  Eigen::VectorXd cross(m);
  for (std::size_t i = 0; i < m; ++i) {
    cross[static_cast<Eigen::Index>(i)] = oracle.cov(target, cond.points[i]);
    for (std::size_t j = i; j < m; ++j) {
      const double v = oracle.cov(cond.points[i], cond.points[j]);
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }

  const double ladder[] = {cond.jitter, 1e-12, 1e-10, 1e-8};
  for (double jit : ladder) {
    Eigen::MatrixXd s = sigma;
    if (jit > 0.0) s.diagonal().array() += jit;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd sol = llt.solve(cross);
    const double explained = cross.dot(sol);
    double v = var_z - explained;
    if (v < 0.0) {
      if (v < -1e-8) continue;  // cancellation artifact, escalate
      v = 0.0;
    }
    return {v, jit};
  }
  throw std::runtime_error(
      "conditional_variance: covariance matrix singular beyond jitter 1e-8 "
      "(condition estimate exceeds 1/jitter); near-duplicate conditioning points?");
}

double conditional_variance(const CovarianceOracle& oracle,
                            const SpaceTimePoint& target,
                            const ConditioningSet& cond) {
  return conditional_variance_detailed(oracle, target, cond).value;
}

namespace {

double denominator_value(const CovarianceOracle& oracle, const SlndScanConfig& cfg,
                         const SpaceTimePoint& z, double min_rho2) {
  if (cfg.denominator == SlndDenominator::RhoOnly) return min_rho2;
  const EigenSystem& es = oracle.eigensystem();
  double v = std::min(min_rho2, std::sqrt(z.t));
  if (es.bc.kind != BcKind::Robin) v = std::min(v, es.mode(1, z.x));
  return v;
}

}  // namespace

SlndScanReport slnd_ratio_scan(const CovarianceOracle& oracle,
                               const SlndScanConfig& cfg, const RunContext& ctx) {
  if (cfg.trials < 1) throw std::invalid_argument("slnd_ratio_scan: trials >= 1");
  if (cfg.max_m < 1 || cfg.max_m > 20)
    throw std::invalid_argument("slnd_ratio_scan: max_m in [1, 20]");
  const EigenSystem& es = oracle.eigensystem();
  const double L = es.bc.length;
  if (!(0.0 <= cfg.a && cfg.a < cfg.T))
    throw std::invalid_argument("slnd_ratio_scan: need 0 <= a < T");
  if (!(0.0 <= cfg.c && cfg.c < cfg.d && cfg.d <= L))
    throw std::invalid_argument("slnd_ratio_scan: need 0 <= c < d <= L");
  if (es.bc.kind == BcKind::Robin && cfg.strict_interior &&
      (cfg.c < cfg.boundary_margin || cfg.d > L - cfg.boundary_margin))
    throw std::invalid_argument(
        "slnd_ratio_scan: Robin scan is interior-only; rectangle reaches within " +
        std::to_string(cfg.boundary_margin) +
        " of the boundary (pass strict_interior=false to explore)");

  SlndScanReport rep;
  rep.rows.resize(static_cast<std::size_t>(cfg.trials));

  for_each_replicate(cfg.trials, ctx, [&](std::int64_t trial) {
    RngStream rng = RngStream::keyed(cfg.seed, 0x5Cu, static_cast<std::uint64_t>(trial));
    const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.max_m));
    SpaceTimePoint target{cfg.a + (cfg.T - cfg.a) * rng.uniform(),
                          cfg.c + (cfg.d - cfg.c) * rng.uniform()};
    ConditioningSet cond;
    cond.points.reserve(static_cast<std::size_t>(m));
    int guard = 0;
    while (static_cast<int>(cond.points.size()) < m && guard++ < 1000) {
      SpaceTimePoint p{cfg.a + (cfg.T - cfg.a) * rng.uniform(),
                       cfg.c + (cfg.d - cfg.c) * rng.uniform()};
      if (rho(p, target) < cfg.min_rho) continue;
      bool ok = true;
      for (const auto& q : cond.points)
        if (rho(p, q) < 1e-6) ok = false;
      if (ok) cond.points.push_back(p);
    }

    double min_rho2 = std::numeric_limits<double>::infinity();
    for (const auto& p : cond.points) {
      const double r = rho(p, target);
      min_rho2 = std::min(min_rho2, r * r);
    }
    const double cv = conditional_variance(oracle, target, cond);
    const double den = denominator_value(oracle, cfg, target, min_rho2);

    SlndTrialRow row;
    row.trial = static_cast<int>(trial);
    row.m = m;
    row.min_rho2 = min_rho2;
    row.cond_var = cv;
    row.ratio = cv / den;
    rep.rows[static_cast<std::size_t>(trial)] = row;
  });

  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  for (const auto& r : rep.rows) {
    rep.min_ratio = std::min(rep.min_ratio, r.ratio);
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
  }
  return rep;
}

}  // namespace spdelab
