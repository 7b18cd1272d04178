#include "spdelab/gaussian_field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spdelab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// J_n pieces; y-arguments are 2*lambda*time
inline double one_minus_exp_over(double y, double two_lam) {
  // (1 - e^{-y}) / (2 lambda), with y = 2 lambda t
  return (y > 45.0 ? 1.0 : -std::expm1(-y)) / two_lam;
}

struct PairGeom {
  double t, s, x1, x2;
  double tmin, adt;
};

// one mode's contribution
template <bool Increment>
inline double mode_term(double lam, double A, double B, const PairGeom& g) {
  double Jtt, Jss, Jts;
  if (lam < 1e-300) {
    Jtt = g.t;
    Jss = g.s;
    Jts = g.tmin;
  } else {
    const double two_lam = 2.0 * lam;
    Jtt = one_minus_exp_over(two_lam * g.t, two_lam);
    Jss = one_minus_exp_over(two_lam * g.s, two_lam);
    const double base = one_minus_exp_over(two_lam * g.tmin, two_lam);
    double ed;
    if (g.adt == 0.0)
      ed = 1.0;
    else {
      const double y = lam * g.adt;
      ed = (y > 45.0) ? 0.0 : std::exp(-y);
    }
    Jts = ed * base;
  }
  if constexpr (Increment)
    return A * A * Jtt + B * B * Jss - 2.0 * A * B * Jts;
  else
    return A * B * Jts;
}

}  // namespace

CovarianceOracle::CovarianceOracle(const EigenSystem& es, std::int64_t n_modes)
    : es_(&es) {
  n_modes_ = (n_modes <= 0) ? es.count : n_modes;
  analytic_ = (es.bc.kind != BcKind::Robin);
  if (!analytic_ && n_modes_ > es.count)
    throw std::invalid_argument(
        "CovarianceOracle: Robin mode count capped at the built " +
        std::to_string(es.count));
}

double CovarianceOracle::mode_sum(const SpaceTimePoint& z1,
                                  const SpaceTimePoint& z2,
                                  bool increment) const {
  PairGeom g;
  g.t = z1.t;
  g.s = z2.t;
  g.x1 = z1.x;
  g.x2 = z2.x;
  g.tmin = std::min(g.t, g.s);
  g.adt = std::abs(g.t - g.s);

  const double L = es_->bc.length;
  if (g.x1 < 0.0 || g.x1 > L || g.x2 < 0.0 || g.x2 > L || g.t < 0.0 || g.s < 0.0)
    throw std::domain_error("CovarianceOracle: point outside [0,inf) x [0,L]");

  const std::int64_t n_array = std::min<std::int64_t>(n_modes_, es_->count);
  const bool use_analytic = analytic_ && n_modes_ > es_->count;

  // array route through the built eigen-system
  auto array_block = [&](std::int64_t lo, std::int64_t hi) {
    double acc = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      const int n = static_cast<int>(i) + 1;
      const double lam = es_->lambdas[static_cast<std::size_t>(i)];
      const double A = es_->mode(n, g.x1);
      const double B = es_->mode(n, g.x2);
      acc += increment ? mode_term<true>(lam, A, B, g)
                       : mode_term<false>(lam, A, B, g);
    }
    return acc;
  };

  if (!use_analytic)
    return blocked_sum(n_array, 4096, ctx_, array_block);

  // closed-form Dirichlet/Neumann spectrum, trig recurrences per block
  const bool dirichlet = (es_->bc.kind == BcKind::Dirichlet);
  const double kappa = kPi / L;
  const double half_k2 = 0.5 * kappa * kappa;
  const double nf2 = 2.0 / L;
  const double a1 = kappa * g.x1, a2 = kappa * g.x2;
  const double c1s = std::cos(a1), s1s = std::sin(a1);
  const double c2s = std::cos(a2), s2s = std::sin(a2);

  auto analytic_block = [&](std::int64_t lo, std::int64_t hi) {
    // frequency index m: Dirichlet m = n, Neumann m = n - 1
    const std::int64_t m0 = dirichlet ? lo + 1 : lo;
    double c1 = std::cos(m0 * a1), s1 = std::sin(m0 * a1);
    double c2 = std::cos(m0 * a2), s2 = std::sin(m0 * a2);
    double acc = 0.0;
    for (std::int64_t m = m0; m < m0 + (hi - lo); ++m) {
      const double lam = half_k2 * static_cast<double>(m) * static_cast<double>(m);
      double A, B, w2;
      if (dirichlet) {
        A = s1;
        B = s2;
        w2 = nf2;
      } else {
        A = c1;
        B = c2;
        w2 = (m == 0) ? 1.0 / L : nf2;
      }
      const double term = increment ? mode_term<true>(lam, A, B, g)
                                    : mode_term<false>(lam, A, B, g);
      acc += w2 * term;
      // rotate (c, s) by the base angle
      const double nc1 = c1 * c1s - s1 * s1s;
      s1 = s1 * c1s + c1 * s1s;
      c1 = nc1;
      const double nc2 = c2 * c2s - s2 * s2s;
      s2 = s2 * c2s + c2 * s2s;
      c2 = nc2;
    }
    return acc;
  };

  return blocked_sum(n_modes_, 8192, ctx_, analytic_block);
}

double CovarianceOracle::cov(const SpaceTimePoint& z1,
                             const SpaceTimePoint& z2) const {
  if (z1.t == 0.0 || z2.t == 0.0) return 0.0;  // w(0, .) = 0
  return mode_sum(z1, z2, false);
}

double CovarianceOracle::var_increment(const SpaceTimePoint& z1,
                                       const SpaceTimePoint& z2) const {
  const double v = mode_sum(z1, z2, true);
  if (v < 0.0) {
    if (v < -1e-10)
      throw std::runtime_error(
          "var_increment: negative variance " + std::to_string(v) +
          " beyond roundoff tolerance; oracle inconsistency");
    return 0.0;
  }
  return v;
}

FieldPath sample_w(const CovarianceOracle& oracle, std::span<const double> times,
                   std::span<const double> xs, std::uint64_t seed,
                   std::uint64_t replicate, bool record_noise) {
  const EigenSystem& es = oracle.eigensystem();
  const int n = static_cast<int>(std::min<std::int64_t>(oracle.mode_count(), es.count));
  return sample_w(es, n, times, xs, seed, replicate, record_noise);
}

int recommended_mode_count(const EigenSystem& es, double t_max, double fraction) {
  if (!(t_max > 0.0)) throw std::invalid_argument("recommended_mode_count: t_max <= 0");
  CovarianceOracle oracle(es);
  const SpaceTimePoint mid{t_max, 0.5 * es.bc.length};
  const double var_scale = oracle.variance(mid);
  const double f = es.sup_mode_bound();
  const double c = es.lambda_growth_lower();
  const double n = f * f / (2.0 * c * fraction * var_scale);
  return static_cast<int>(std::ceil(n));
}

OuSampler::OuSampler(const EigenSystem& es, int n_modes, std::span<const double> xs)
    : n_modes_(n_modes), n_x_(xs.size()) {
  if (n_modes < 1 || n_modes > es.count)
    throw std::invalid_argument("OuSampler: n_modes must be in [1, es.count]");
  lambdas_.assign(es.lambdas.begin(), es.lambdas.begin() + n_modes);
  basis_.resize(static_cast<std::size_t>(n_modes) * xs.size());
  for (int n = 1; n <= n_modes; ++n)
    for (std::size_t j = 0; j < xs.size(); ++j)
      basis_[static_cast<std::size_t>(n - 1) * xs.size() + j] = es.mode(n, xs[j]);
  state_.assign(static_cast<std::size_t>(n_modes), 0.0);
}

void OuSampler::reset() { std::fill(state_.begin(), state_.end(), 0.0); }

void OuSampler::prepare_dt(double dt) const {
  if (dt == cached_dt_) return;
  decay_.resize(static_cast<std::size_t>(n_modes_));
  sd_.resize(static_cast<std::size_t>(n_modes_));
  for (int i = 0; i < n_modes_; ++i) {
    const double lam = lambdas_[static_cast<std::size_t>(i)];
    if (lam < 1e-300) {
      decay_[static_cast<std::size_t>(i)] = 1.0;
      sd_[static_cast<std::size_t>(i)] = std::sqrt(dt);
    } else {
      decay_[static_cast<std::size_t>(i)] = std::exp(-lam * dt);
      sd_[static_cast<std::size_t>(i)] =
          std::sqrt(-std::expm1(-2.0 * lam * dt) / (2.0 * lam));
    }
  }
  cached_dt_ = dt;
}

void OuSampler::advance(double dt, RngStream& rng, double* noise_out) {
  if (!(dt > 0.0)) throw std::invalid_argument("OuSampler::advance: dt must be > 0");
  prepare_dt(dt);
  for (int i = 0; i < n_modes_; ++i) {
    const double xi = rng.normal();
    if (noise_out) noise_out[i] = xi;
    state_[static_cast<std::size_t>(i)] =
        decay_[static_cast<std::size_t>(i)] * state_[static_cast<std::size_t>(i)] +
        sd_[static_cast<std::size_t>(i)] * xi;
  }
}

void OuSampler::synth(std::span<double> out_row) const {
  if (out_row.size() != n_x_)
    throw std::invalid_argument("OuSampler::synth: bad row size");
  for (std::size_t j = 0; j < n_x_; ++j) out_row[j] = 0.0;
  for (int i = 0; i < n_modes_; ++i) {
    const double a = state_[static_cast<std::size_t>(i)];
    const double* row = &basis_[static_cast<std::size_t>(i) * n_x_];
    for (std::size_t j = 0; j < n_x_; ++j) out_row[j] += a * row[j];
  }
}

FieldPath sample_w(const EigenSystem& es, int n_modes,
                   std::span<const double> times, std::span<const double> xs,
                   std::uint64_t seed, std::uint64_t replicate,
                   bool record_noise) {
  if (times.empty() || xs.empty())
    throw std::invalid_argument("sample_w: empty grid");
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    if (!(times[k] < times[k + 1]))
      throw std::invalid_argument("sample_w: time grid must be strictly increasing");
  if (times[0] < 0.0) throw std::invalid_argument("sample_w: times must be >= 0");

  FieldPath path;
  path.times.assign(times.begin(), times.end());
  path.xs.assign(xs.begin(), xs.end());
  path.n_modes = n_modes;
  path.seed = seed;
  path.replicate = replicate;
  path.values.assign(times.size() * xs.size(), 0.0);
  if (record_noise) path.noise.assign(times.size() * static_cast<std::size_t>(n_modes), 0.0);

  OuSampler sampler(es, n_modes, xs);
  RngStream rng = RngStream::keyed(seed, 0x77u /* 'w' */, replicate);

  double t_prev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double dt = times[k] - t_prev;
    if (dt > 0.0) {
      double* noise_row =
          record_noise ? &path.noise[k * static_cast<std::size_t>(n_modes)] : nullptr;
      sampler.advance(dt, rng, noise_row);
    }
    sampler.synth(std::span<double>(&path.values[k * xs.size()], xs.size()));
    t_prev = times[k];
  }
  return path;
}

}  // namespace spdelab
