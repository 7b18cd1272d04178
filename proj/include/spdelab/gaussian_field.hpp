#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spdelab/parallel.hpp"
#include "spdelab/rng.hpp"
#include "spdelab/spacetime.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

// Exact covariance of the additive-noise solution
//   w(t,x) = int_{(0,t) x [0,L]} G_{t-s}(x,y) xi(ds dy),
// via the Wiener isometry: E[w(t,x) w(s,y)] = sum_n f_n(x) f_n(y) J_n(t,s),
//   J_n(t,s) = (e^{-lambda_n |t-s|} - e^{-lambda_n (t+s)}) / (2 lambda_n),
// with J_n = t^s in the lambda_n -> 0 limit.
//
// n_modes may exceed es.count for Dirichlet/Neumann; the spectrum is then
// extended from the closed forms (criterion-scale mode counts of ~1e7 do not
// warrant materialized arrays). Robin is capped at es.count.
class CovarianceOracle {
 public:
  explicit CovarianceOracle(const EigenSystem& es, std::int64_t n_modes = 0);

  double cov(const SpaceTimePoint& z1, const SpaceTimePoint& z2) const;

  // Var(w(z1) - w(z2)), computed as a fused mode sum (no macro-cancellation);
  // roundoff negatives above -1e-10 clip to 0, anything lower throws.
  double var_increment(const SpaceTimePoint& z1, const SpaceTimePoint& z2) const;

  double variance(const SpaceTimePoint& z) const { return cov(z, z); }

  std::int64_t mode_count() const { return n_modes_; }
  const EigenSystem& eigensystem() const { return *es_; }

  void set_run_context(const RunContext& ctx) { ctx_ = ctx; }

 private:
  const EigenSystem* es_;
  std::int64_t n_modes_;
  bool analytic_;  // closed-form Dirichlet/Neumann spectrum beyond es.count
  RunContext ctx_;

  double mode_sum(const SpaceTimePoint& z1, const SpaceTimePoint& z2,
                  bool increment) const;
};

// One realization of a field on a (time x space) grid, with the standard
// normal draws that produced it. Bit-reproducible from (seed, replicate,
// grids, mode count).
struct FieldPath {
  std::vector<double> times;
  std::vector<double> xs;
  std::vector<double> values;  // row-major, times.size() x xs.size()
  std::vector<double> noise;   // row-major, times.size() x n_modes
  int n_modes = 0;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  double at(std::size_t ti, std::size_t xi) const {
    return values[ti * xs.size() + xi];
  }
};

// Exact-in-law sampler: w(t,x) = sum_n f_n(x) X_n(t) with independent OU
// coefficients advanced exactly over the time grid,
//   X_n(t+d) = e^{-lambda_n d} X_n(t) + N(0, (1 - e^{-2 lambda_n d})/(2 lambda_n)),
// variance d when lambda_n = 0, X_n(0) = 0.
FieldPath sample_w(const EigenSystem& es, int n_modes,
                   std::span<const double> times, std::span<const double> xs,
                   std::uint64_t seed, std::uint64_t replicate = 0,
                   bool record_noise = true);

// convenience overload on the oracle's eigen-system and mode cap
FieldPath sample_w(const CovarianceOracle& oracle, std::span<const double> times,
                   std::span<const double> xs, std::uint64_t seed,
                   std::uint64_t replicate = 0, bool record_noise = true);

// smallest N with the omitted-variance bound sum_{n>N} F^2/(2 lambda_n)
// below `fraction` of the variance scale at the time horizon
int recommended_mode_count(const EigenSystem& es, double t_max,
                           double fraction = 1e-4);

// Incremental engine behind sample_w, usable for streaming statistics without
// storing paths. States advance exactly; synth writes one time-slice.
class OuSampler {
 public:
  OuSampler(const EigenSystem& es, int n_modes, std::span<const double> xs);

  void reset();
  // advances all modes by dt, consuming n_modes normals from the stream;
  // optionally records them into `noise_out`
  void advance(double dt, RngStream& rng, double* noise_out = nullptr);
  void synth(std::span<double> out_row) const;
  std::span<const double> state() const { return state_; }
  int n_modes() const { return n_modes_; }

 private:
  int n_modes_;
  std::vector<double> lambdas_;
  std::vector<double> basis_;  // n_modes x xs.size(), row-major per mode
  std::vector<double> state_;
  std::size_t n_x_;
  // cached per-dt transition (dt is usually uniform)
  mutable double cached_dt_ = -1.0;
  mutable std::vector<double> decay_, sd_;
  void prepare_dt(double dt) const;
};

}  // namespace spdelab
