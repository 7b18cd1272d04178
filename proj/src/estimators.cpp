#include "spdelab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spdelab {

namespace {
constexpr double kEe = 15.154262241479264;  // e^e
constexpr double kE = 2.718281828459045;

void check_ladder(std::span<const double> ladder) {
  if (ladder.empty()) throw std::invalid_argument("statistic: empty ladder");
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k)
    if (!(ladder[k] > ladder[k + 1]))
      throw std::invalid_argument("statistic: ladder must be strictly decreasing");
}

// smallest rung must span at least 2 grid cells in rho-units
void check_resolution(const GridView& g, double eps_min) {
  double floor_rho = 0.0;
  if (g.ts.size() > 1) {
    double max_dt = 0.0;
    for (std::size_t i = 0; i + 1 < g.ts.size(); ++i)
      max_dt = std::max(max_dt, g.ts[i + 1] - g.ts[i]);
    floor_rho = std::max(floor_rho, std::pow(2.0 * max_dt, 0.25));
  }
  if (g.xs.size() > 1) {
    double max_dx = 0.0;
    for (std::size_t j = 0; j + 1 < g.xs.size(); ++j)
      max_dx = std::max(max_dx, std::abs(g.xs[j + 1] - g.xs[j]));
    floor_rho = std::max(floor_rho, std::sqrt(2.0 * max_dx));
  }
  if (eps_min < floor_rho * (1.0 - 1e-12))
    throw std::invalid_argument(
        "statistic: ladder rung " + std::to_string(eps_min) +
        " below the grid resolution floor " + std::to_string(floor_rho) +
        " (2 cells in rho-units)");
}
}  // namespace

double modulus_normalizer(double r, Normalizer kind) {
  switch (kind) {
    case Normalizer::LogLog:
      return r * std::sqrt(std::log(std::log(std::max(1.0 / r, kEe))));
    case Normalizer::Log:
      return r * std::sqrt(std::log(std::max(1.0 / r, kE)));
    default:
      return 1.0;
  }
}

std::vector<double> local_modulus_path(const GridView& g, std::size_t i0,
                                       std::size_t j0,
                                       std::span<const double> ladder,
                                       Normalizer kind) {
  check_ladder(ladder);
  check_resolution(g, ladder.back());
  const double eps_max = ladder[0];
  const SpaceTimePoint z0 = g.point(i0, j0);
  const double v0 = g.at(i0, j0);

  // one pass: bucket each point by its rho and take running sups
  std::vector<double> sups(ladder.size(), 0.0);
  for (std::size_t i = 0; i < g.ts.size(); ++i) {
    if (std::sqrt(std::sqrt(std::abs(g.ts[i] - z0.t))) > eps_max) continue;
    for (std::size_t j = 0; j < g.xs.size(); ++j) {
      const double r = rho(g.point(i, j), z0);
      if (r == 0.0 || r > eps_max) continue;
      const double ratio =
          std::abs(g.at(i, j) - v0) / (kind == Normalizer::None
                                           ? 1.0
                                           : modulus_normalizer(r, kind));
      for (std::size_t k = 0; k < ladder.size(); ++k) {
        if (r > ladder[k]) break;
        sups[k] = std::max(sups[k], ratio);
      }
    }
  }
  return sups;
}

std::vector<double> uniform_modulus_path(const GridView& g,
                                         std::span<const double> ladder,
                                         Normalizer kind) {
  check_ladder(ladder);
  check_resolution(g, ladder.back());
  const double eps_max = ladder[0];
  const double t_span = eps_max * eps_max * eps_max * eps_max;
  const double x_span = eps_max * eps_max;
  std::vector<double> sups(ladder.size(), 0.0);
  const std::size_t nt = g.ts.size(), nx = g.xs.size();
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const SpaceTimePoint z = g.point(i, j);
      const double v = g.at(i, j);
      for (std::size_t i2 = i; i2 < nt; ++i2) {
        if (g.ts[i2] - g.ts[i] > t_span) break;
        // ordered pairs counted once: same time row starts past j
        for (std::size_t j2 = (i2 == i ? j + 1 : 0); j2 < nx; ++j2) {
          if (std::abs(g.xs[j2] - z.x) > x_span) continue;
          const double r = rho(g.point(i2, j2), z);
          if (r == 0.0 || r > eps_max) continue;
          const double ratio =
              std::abs(g.at(i2, j2) - v) /
              (kind == Normalizer::None ? 1.0 : modulus_normalizer(r, kind));
          for (std::size_t k = 0; k < ladder.size(); ++k) {
            if (r > ladder[k]) break;
            sups[k] = std::max(sups[k], ratio);
          }
        }
      }
    }
  }
  return sups;
}

double ball_sup_path(const GridView& g, std::size_t i0, std::size_t j0, double r) {
  const SpaceTimePoint z0 = g.point(i0, j0);
  const double v0 = g.at(i0, j0);
  double sup = 0.0;
  for (std::size_t i = 0; i < g.ts.size(); ++i) {
    if (std::sqrt(std::sqrt(std::abs(g.ts[i] - z0.t))) > r) continue;
    for (std::size_t j = 0; j < g.xs.size(); ++j) {
      if (rho(g.point(i, j), z0) > r) continue;
      sup = std::max(sup, std::abs(g.at(i, j) - v0));
    }
  }
  return sup;
}

std::vector<double> chung_path(const GridView& g, std::size_t i0, std::size_t j0,
                               std::span<const double> ladder) {
  check_ladder(ladder);
  check_resolution(g, ladder.back());
  std::vector<double> out(ladder.size(), 0.0);
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const double eps = ladder[k];
    const double sup = ball_sup_path(g, i0, j0, eps);
    const double scale =
        std::pow(std::log(std::log(std::max(1.0 / eps, kEe))), 1.0 / 6.0) / eps;
    running = std::min(running, scale * sup);
    out[k] = running;
  }
  return out;
}

std::vector<double> exceptional_scan_path(const GridView& g, double eps,
                                          std::span<const double> thetas,
                                          std::span<const double> sigma_at) {
  const std::size_t nt = g.ts.size(), nx = g.xs.size();
  if (!sigma_at.empty() && sigma_at.size() != nt * nx)
    throw std::invalid_argument("exceptional_scan: sigma_at size mismatch");
  std::vector<std::int64_t> counts(thetas.size(), 0);
  const double ladder[1] = {eps};
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const double ratio =
          local_modulus_path(g, i, j, std::span<const double>(ladder, 1),
                             Normalizer::Log)[0];
      const double s = sigma_at.empty() ? 1.0 : std::abs(sigma_at[i * nx + j]);
      for (std::size_t q = 0; q < thetas.size(); ++q)
        if (ratio > thetas[q] * s) ++counts[q];
    }
  }
  std::vector<double> frac(thetas.size(), 0.0);
  for (std::size_t q = 0; q < thetas.size(); ++q)
    frac[q] = static_cast<double>(counts[q]) / static_cast<double>(nt * nx);
  return frac;
}

ModulusStatistic aggregate_modulus(std::vector<std::vector<double>> per_path,
                                   std::span<const double> ladder,
                                   Normalizer kind) {
  check_ladder(ladder);
  ModulusStatistic st;
  st.ladder.assign(ladder.begin(), ladder.end());
  st.kind = kind;
  st.per_path = std::move(per_path);
  st.medians.resize(ladder.size(), 0.0);
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    std::vector<double> col;
    col.reserve(st.per_path.size());
    for (const auto& row : st.per_path) col.push_back(row[k]);
    st.medians[k] = median(std::move(col));
  }
  return st;
}

WilsonInterval wilson(std::int64_t k, std::int64_t n, double zq) {
  if (n <= 0) throw std::invalid_argument("wilson: n must be > 0");
  const double p = static_cast<double>(k) / static_cast<double>(n);
  const double z2 = zq * zq;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      zq * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * static_cast<double>(n) * n)) /
      denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SmallBallEstimate small_ball_estimate(std::span<const double> ball_sups, double r,
                                      std::span<const double> eps, double zq) {
  if (ball_sups.size() < 1000)
    throw std::invalid_argument("small_ball: need at least 1e3 samples");
  SmallBallEstimate sb;
  sb.r = r;
  sb.eps.assign(eps.begin(), eps.end());
  sb.samples = static_cast<std::int64_t>(ball_sups.size());
  for (std::size_t k = 0; k < eps.size(); ++k) {
    std::int64_t count = 0;
    for (double s : ball_sups)
      if (s <= eps[k]) ++count;
    const double p = static_cast<double>(count) / static_cast<double>(sb.samples);
    sb.p_hat.push_back(p);
    sb.intervals.push_back(wilson(count, sb.samples, zq));
    if (count == 0 || count == sb.samples) sb.excluded.push_back(k);
  }
  return sb;
}

ExponentFit fit_exponent(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("fit_exponent: size mismatch");
  if (xs.size() < 5) throw std::invalid_argument("fit_exponent: need >= 5 points");
  double xmin = xs[0], xmax = xs[0];
  for (double x : xs) {
    if (!(x > 0.0)) throw std::invalid_argument("fit_exponent: abscissa must be positive");
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  for (double y : ys)
    if (!(y > 0.0)) throw std::invalid_argument("fit_exponent: ordinate must be positive");
  if (xmax / xmin < 10.0)
    throw std::invalid_argument("fit_exponent: abscissa span below one decade (" +
                                std::to_string(xmax / xmin) + "x)");

  const std::size_t n = xs.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += std::log(xs[i]);
    sy += std::log(ys[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(xs[i]) - mx, dy = std::log(ys[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  ExponentFit fit;
  fit.points = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = (std::log(ys[i]) - my) - fit.slope * (std::log(xs[i]) - mx);
    ssr += resid * resid;
  }
  fit.stderr_slope = (n > 2) ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  fit.r2 = (syy > 0.0) ? 1.0 - ssr / syy : 1.0;
  return fit;
}

std::vector<double> moment_norms(std::span<const double> values,
                                 std::span<const int> ks) {
  if (values.empty()) throw std::invalid_argument("moment_norms: no samples");
  std::vector<double> out;
  out.reserve(ks.size());
  for (int k : ks) {
    if (k < 1) throw std::invalid_argument("moment_norms: k must be >= 1");
    if (k > 8 && values.size() < 100000)
      throw std::invalid_argument(
          "moment_norms: k > 8 rejected below 1e5 samples (tail-unstable)");
    double acc = 0.0;
    for (double v : values) acc += std::pow(std::abs(v), k);
    out.push_back(std::pow(acc / static_cast<double>(values.size()), 1.0 / k));
  }
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace spdelab
