#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spdelab/spacetime.hpp"

namespace spdelab {

// Read-only view of one realization on a (time x space) grid.
struct GridView {
  std::span<const double> ts;
  std::span<const double> xs;
  std::span<const double> vals;  // row-major ts x xs

  double at(std::size_t i, std::size_t j) const { return vals[i * xs.size() + j]; }
  SpaceTimePoint point(std::size_t i, std::size_t j) const { return {ts[i], xs[j]}; }
};

enum class Normalizer {
  LogLog,  // rho sqrt(log log (1/rho)), guarded
  Log,     // rho sqrt(log (1/rho)), guarded
  None     // plain sup of |increment|
};

// modulus denominator at distance r; loglog guard keeps the iterated log >= 1
// by replacing 1/rho with max(1/rho, e^e) (log: max(1/rho, e))
double modulus_normalizer(double r, Normalizer kind);

// Per-path statistics -------------------------------------------------------

// sup over grid points z in B*_rho(z0, eps) of |v(z) - v(z0)| / psi(rho);
// one value per ladder rung (ladder strictly decreasing).
std::vector<double> local_modulus_path(const GridView& g, std::size_t i0,
                                       std::size_t j0,
                                       std::span<const double> ladder,
                                       Normalizer kind);

// sup over pairs z, z' in the window with 0 < rho <= eps
std::vector<double> uniform_modulus_path(const GridView& g,
                                         std::span<const double> ladder,
                                         Normalizer kind);

// plain sup over B_rho(z0, r) of |v - v(z0)| (for small-ball thresholds)
double ball_sup_path(const GridView& g, std::size_t i0, std::size_t j0, double r);

// running minimum over the ladder of (loglog(1/eps))^{1/6} / eps * ball sup
std::vector<double> chung_path(const GridView& g, std::size_t i0, std::size_t j0,
                               std::span<const double> ladder);

// fraction of window grid points whose local sqrt(log)-normalized ratio at
// scale eps exceeds theta * |sigma_at(z)|, one fraction per theta.
// sigma_at may be empty (treated as 1, the additive-noise case).
std::vector<double> exceptional_scan_path(const GridView& g, double eps,
                                          std::span<const double> thetas,
                                          std::span<const double> sigma_at);

// Aggregates ----------------------------------------------------------------

struct ModulusStatistic {
  std::vector<double> ladder;
  Normalizer kind = Normalizer::LogLog;
  // per_path[p][k] = statistic of path p at rung k
  std::vector<std::vector<double>> per_path;
  std::vector<double> medians;  // per rung
};

ModulusStatistic aggregate_modulus(std::vector<std::vector<double>> per_path,
                                   std::span<const double> ladder, Normalizer kind);

struct WilsonInterval {
  double lo = 0.0, hi = 1.0;
};
// Wilson score interval for k successes out of n at normal quantile zq
WilsonInterval wilson(std::int64_t k, std::int64_t n, double zq = 1.96);

struct SmallBallEstimate {
  double r = 0.0;
  std::vector<double> eps;     // thresholds (descending with the ladder)
  std::vector<double> p_hat;   // P{ball sup <= eps}
  std::vector<WilsonInterval> intervals;
  std::int64_t samples = 0;
  std::vector<std::size_t> excluded;  // rungs with p_hat = 0 or 1, left out of fits
};

// p_hat over paths from precomputed ball sups
SmallBallEstimate small_ball_estimate(std::span<const double> ball_sups, double r,
                                      std::span<const double> eps, double zq = 1.96);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 0.0;
  int points = 0;
};

// least squares on (log x, log y); requires >= 5 points spanning >= 1 decade
ExponentFit fit_exponent(std::span<const double> xs, std::span<const double> ys);

// empirical k-norms ||V||_k = (mean |V|^k)^{1/k} over replicates
std::vector<double> moment_norms(std::span<const double> values,
                                 std::span<const int> ks);

double median(std::vector<double> v);
double quantile(std::vector<double> v, double q);

}  // namespace spdelab
