#pragma once

#include <cstdint>
#include <vector>

#include "spdelab/gaussian_field.hpp"

namespace spdelab {

struct ConditioningSet {
  std::vector<SpaceTimePoint> points;  // pairwise rho-distinct
  double jitter = 0.0;                 // initial diagonal regularization

  void validate() const;
};

struct ConditionalVarianceResult {
  double value = 0.0;
  double jitter_used = 0.0;
};

// Var(w(target) | w at conditioning points) through the Schur complement
// Var(w(z)) - c' Sigma^{-1} c, solved by Cholesky with jitter escalation
// 0, 1e-12, 1e-10, 1e-8. Negative results above -1e-8 clip to 0.
ConditionalVarianceResult conditional_variance_detailed(
    const CovarianceOracle& oracle, const SpaceTimePoint& target,
    const ConditioningSet& cond);

double conditional_variance(const CovarianceOracle& oracle,
                            const SpaceTimePoint& target,
                            const ConditioningSet& cond);

enum class SlndDenominator {
  RhoOnly,     // min_j rho^2(z, z_j)
  BcSpecific,  // min rho^2 ^ sqrt(t) ^ f1-term (D/N); min rho^2 ^ sqrt(t) (Robin)
};

struct SlndScanConfig {
  double a = 0.1, T = 1.0, c = 0.2, d = 0.8;  // rectangle [a,T] x [c,d]
  int trials = 200;
  int max_m = 20;
  std::uint64_t seed = 1;
  SlndDenominator denominator = SlndDenominator::BcSpecific;
  bool strict_interior = true;  // Robin requires targets inside (0, L)
  double boundary_margin = 0.05;
  double min_rho = 1e-2;  // minimum target-to-conditioning separation
};

struct SlndTrialRow {
  int trial = 0;
  int m = 0;
  double min_rho2 = 0.0;
  double cond_var = 0.0;
  double ratio = 0.0;
};

struct SlndScanReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::vector<SlndTrialRow> rows;
};

SlndScanReport slnd_ratio_scan(const CovarianceOracle& oracle,
                               const SlndScanConfig& cfg,
                               const RunContext& ctx = {});

}  // namespace spdelab
