#include "spdelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spdelab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr long double kPiL = 3.141592653589793238462643383279503L;

struct RobinRoot {
  int branch;            // eta = (pi*branch + phi) / L
  long double phi;       // in (-pi/2, pi/2)
  double eta;
};

// Characteristic function with tan singularities cleared, per branch:
// eta = (pi k + phi)/L, h(phi) = tan(phi)(eta^2 + alpha beta) - (beta-alpha) eta.
// Sign changes of h within a branch are sign changes of
// g(eta) = sin(eta L)(eta^2+ab) - cos(eta L)(b-a) eta, since
// g = (-1)^k cos(phi) h and cos(phi) > 0 on the open branch.
long double robin_h(long double phi, int k, long double alpha, long double beta,
                    long double L) {
  const long double eta = (kPiL * k + phi) / L;
  return std::tan(phi) * (eta * eta + alpha * beta) - (beta - alpha) * eta;
}

RobinRoot bisect_robin(int k, long double lo, long double hi, long double alpha,
                       long double beta, long double L) {
  long double flo = robin_h(lo, k, alpha, beta, L);
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (mid == lo || mid == hi) break;
    const long double fm = robin_h(mid, k, alpha, beta, L);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  const long double phi = 0.5L * (lo + hi);
  RobinRoot r;
  r.branch = k;
  r.phi = phi;
  r.eta = static_cast<double>((kPiL * k + phi) / L);
  return r;
}

std::vector<RobinRoot> robin_positive_roots(const BoundaryCondition& bc, int want) {
  const long double alpha = bc.alpha, beta = bc.beta, L = bc.length;

  std::vector<RobinRoot> roots;
  roots.reserve(static_cast<std::size_t>(want) + 2);

  if (bc.alpha == bc.beta) {
    // tan(eta L) = 0: roots exactly at eta = pi k / L
    for (int k = 1; roots.size() < static_cast<std::size_t>(want); ++k) {
      RobinRoot r;
      r.branch = k;
      r.phi = 0.0L;
      r.eta = static_cast<double>(kPiL * k / L);
      roots.push_back(r);
    }
    return roots;
  }

  // scan step min(pi/(4L), 0.01) in eta translates to phi = eta * L
  const long double phi_step =
      std::min<long double>(kPiL / 4.0L, 0.01L * L);
  const long double margin = 1e-9L;
  const int max_branch = want + 6;
  int last_complete_branch = -1;
  for (int k = 0; k <= max_branch; ++k) {
    const long double lo0 = (k == 0) ? margin : (-kPiL / 2.0L + margin);
    const long double hi0 = kPiL / 2.0L - margin;
    long double prev_phi = lo0;
    long double prev_h = robin_h(prev_phi, k, alpha, beta, L);
    for (long double phi = lo0 + phi_step;; phi += phi_step) {
      if (phi > hi0) phi = hi0;
      const long double h = robin_h(phi, k, alpha, beta, L);
      if (h == 0.0L) {
        RobinRoot r;
        r.branch = k;
        r.phi = phi;
        r.eta = static_cast<double>((kPiL * k + phi) / L);
        if (r.eta > 1e-14) roots.push_back(r);
      } else if ((h < 0) != (prev_h < 0)) {
        RobinRoot r = bisect_robin(k, prev_phi, phi, alpha, beta, L);
        if (r.eta > 1e-14) roots.push_back(r);
      }
      prev_phi = phi;
      prev_h = h;
      if (phi >= hi0) break;
    }
    last_complete_branch = k;
    if (roots.size() >= static_cast<std::size_t>(want)) break;
  }

  if (roots.size() < static_cast<std::size_t>(want))
    throw std::runtime_error(
        "build_eigensystem: Robin root scan found only " +
        std::to_string(roots.size()) + " of " + std::to_string(want) +
        " roots up to eta = " +
        std::to_string(static_cast<double>(kPiL * (last_complete_branch + 0.5L) /
                                           static_cast<long double>(bc.length))) +
        "; scan broke past branch " + std::to_string(last_complete_branch));

  std::sort(roots.begin(), roots.end(),
            [](const RobinRoot& a, const RobinRoot& b) { return a.eta < b.eta; });

  // numerical tangency: keep one of any pair closer than 1e-8
  std::vector<RobinRoot> dedup;
  for (const RobinRoot& r : roots) {
    if (!dedup.empty() && std::abs(r.eta - dedup.back().eta) < 1e-8) continue;
    dedup.push_back(r);
  }
  if (dedup.size() < static_cast<std::size_t>(want))
    throw std::runtime_error(
        "build_eigensystem: root dedupe left fewer roots than requested");
  dedup.resize(static_cast<std::size_t>(want));
  return dedup;
}

// ||e||^2 for e(x) = cos(eta x) - (alpha/eta) sin(eta x) on [0, L], closed form
double robin_norm_sq(double eta, double alpha, double L) {
  const double s2 = std::sin(2.0 * eta * L);
  const double sL = std::sin(eta * L);
  const double i_cc = 0.5 * L + s2 / (4.0 * eta);
  const double i_ss = 0.5 * L - s2 / (4.0 * eta);
  const double i_cs = sL * sL / (2.0 * eta);
  const double a_over = alpha / eta;
  return i_cc + a_over * a_over * i_ss - 2.0 * a_over * i_cs;
}

}  // namespace

EigenSystem build_eigensystem(const BoundaryCondition& bc, int count,
                              int quad_order) {
  bc.validate();
  if (count < 1) throw std::invalid_argument("build_eigensystem: count must be >= 1");
  if (quad_order <= 0) quad_order = std::max(4 * count, 64);

  EigenSystem es;
  es.bc = bc;
  es.count = count;
  es.quadrature = gauss_legendre(quad_order, 0.0, bc.length);
  es.lambdas.resize(static_cast<std::size_t>(count));
  es.etas.resize(static_cast<std::size_t>(count));
  es.norm_factors.resize(static_cast<std::size_t>(count));

  const double L = bc.length;
  switch (bc.kind) {
    case BcKind::Dirichlet:
      for (int n = 1; n <= count; ++n) {
        const double eta = kPi * n / L;
        es.etas[n - 1] = eta;
        es.lambdas[n - 1] = 0.5 * eta * eta;
        es.norm_factors[n - 1] = std::sqrt(2.0 / L);
      }
      break;
    case BcKind::Neumann:
      for (int n = 1; n <= count; ++n) {
        const double eta = kPi * (n - 1) / L;
        es.etas[n - 1] = eta;
        es.lambdas[n - 1] = 0.5 * eta * eta;
        es.norm_factors[n - 1] = (n == 1) ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L);
      }
      break;
    case BcKind::Robin: {
      const bool zero = bc.has_zero_mode();
      const int positive = zero ? count - 1 : count;
      std::vector<RobinRoot> roots;
      if (positive > 0) roots = robin_positive_roots(bc, positive);

      es.robin_branch.resize(static_cast<std::size_t>(count), 0);
      es.robin_phi.resize(static_cast<std::size_t>(count), 0.0L);
      int idx = 0;
      if (zero) {
        es.etas[0] = 0.0;
        es.lambdas[0] = 0.0;
        // e_1(x) = 1 - alpha x
        const double a = bc.alpha;
        const double nsq = L - a * L * L + a * a * L * L * L / 3.0;
        es.norm_factors[0] = 1.0 / std::sqrt(nsq);
        es.robin_branch[0] = -1;  // marks the affine zero mode
        idx = 1;
      }
      for (const RobinRoot& r : roots) {
        es.etas[static_cast<std::size_t>(idx)] = r.eta;
        es.lambdas[static_cast<std::size_t>(idx)] = 0.5 * r.eta * r.eta;
        es.norm_factors[static_cast<std::size_t>(idx)] =
            1.0 / std::sqrt(robin_norm_sq(r.eta, bc.alpha, L));
        es.robin_branch[static_cast<std::size_t>(idx)] = r.branch;
        es.robin_phi[static_cast<std::size_t>(idx)] = r.phi;
        ++idx;
      }
      break;
    }
  }
  return es;
}

double EigenSystem::mode(int n, double x) const {
  if (n < 1 || n > count)
    throw std::out_of_range("EigenSystem::mode: index " + std::to_string(n) +
                            " outside [1, " + std::to_string(count) + "]");
  if (x < 0.0 || x > bc.length)
    throw std::domain_error("EigenSystem::mode: x = " + std::to_string(x) +
                            " outside [0, L]");
  const std::size_t i = static_cast<std::size_t>(n - 1);
  switch (bc.kind) {
    case BcKind::Dirichlet:
      return norm_factors[i] * std::sin(etas[i] * x);
    case BcKind::Neumann:
      return (n == 1) ? norm_factors[i] : norm_factors[i] * std::cos(etas[i] * x);
    default: {
      if (lambdas[i] < 1e-300)
        return norm_factors[i] * (1.0 - bc.alpha * x);
      const double eta = etas[i];
      return norm_factors[i] *
             (std::cos(eta * x) - (bc.alpha / eta) * std::sin(eta * x));
    }
  }
}

double EigenSystem::mode_deriv(int n, double x) const {
  if (n < 1 || n > count) throw std::out_of_range("EigenSystem::mode_deriv: bad index");
  if (x < 0.0 || x > bc.length)
    throw std::domain_error("EigenSystem::mode_deriv: x outside [0, L]");
  const std::size_t i = static_cast<std::size_t>(n - 1);
  switch (bc.kind) {
    case BcKind::Dirichlet:
      return norm_factors[i] * etas[i] * std::cos(etas[i] * x);
    case BcKind::Neumann:
      return (n == 1) ? 0.0 : -norm_factors[i] * etas[i] * std::sin(etas[i] * x);
    default: {
      if (lambdas[i] < 1e-300) return -norm_factors[i] * bc.alpha;
      const double eta = etas[i];
      return norm_factors[i] *
             (-eta * std::sin(eta * x) - bc.alpha * std::cos(eta * x));
    }
  }
}

double EigenSystem::mode_deriv2(int n, double x) const {
  return -2.0 * lambdas[static_cast<std::size_t>(n - 1)] * mode(n, x);
}

double EigenSystem::sup_mode_bound() const {
  double f = 0.0;
  for (int n = 1; n <= count; ++n) {
    const std::size_t i = static_cast<std::size_t>(n - 1);
    double b;
    switch (bc.kind) {
      case BcKind::Dirichlet:
      case BcKind::Neumann:
        b = norm_factors[i];
        break;
      default:
        if (lambdas[i] < 1e-300) {
          b = norm_factors[i] * std::max(1.0, std::abs(1.0 - bc.alpha * bc.length));
        } else {
          const double r = bc.alpha / etas[i];
          b = norm_factors[i] * std::sqrt(1.0 + r * r);
        }
    }
    f = std::max(f, b);
  }
  return f;
}

double EigenSystem::lambda_growth_lower() const {
  double c = std::numeric_limits<double>::infinity();
  for (int n = 2; n <= count; ++n)
    c = std::min(c, lambdas[static_cast<std::size_t>(n - 1)] /
                        (static_cast<double>(n) * n));
  if (!std::isfinite(c))
    throw std::logic_error("lambda_growth_lower: need at least 2 modes");
  return c;
}

std::vector<double> expand_function(const EigenSystem& es,
                                    const std::function<double(double)>& phi) {
  std::vector<double> coeffs(static_cast<std::size_t>(es.count), 0.0);
  const auto& q = es.quadrature;
  std::vector<double> phi_vals(q.nodes.size());
  for (std::size_t i = 0; i < q.nodes.size(); ++i) phi_vals[i] = phi(q.nodes[i]);
  for (int n = 1; n <= es.count; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
      s += q.weights[i] * phi_vals[i] * es.mode(n, q.nodes[i]);
    coeffs[static_cast<std::size_t>(n - 1)] = s;
  }
  return coeffs;
}

RobinAsymptoticsReport robin_asymptotics_check(const EigenSystem& es) {
  if (es.bc.kind != BcKind::Robin)
    throw std::invalid_argument("asymptotics check is Robin-only");
  if (es.count < 16)
    throw std::invalid_argument(
        "robin_asymptotics_check: need at least 16 modes to estimate the shift");

  const double L = es.bc.length;
  // tail estimate of the integer shift from the top quartile
  const int lo = es.count - es.count / 4;
  double acc = 0.0;
  int cnt = 0;
  for (int n = lo; n <= es.count; ++n) {
    acc += es.etas[static_cast<std::size_t>(n - 1)] * L / kPi - n;
    ++cnt;
  }
  RobinAsymptoticsReport rep;
  rep.n0 = static_cast<int>(std::lround(acc / cnt));
  rep.residuals.resize(static_cast<std::size_t>(es.count));
  rep.norm_trend.resize(static_cast<std::size_t>(es.count));
  for (int n = 1; n <= es.count; ++n) {
    const std::size_t i = static_cast<std::size_t>(n - 1);
    rep.residuals[i] = n * std::abs(es.etas[i] - kPi * (rep.n0 + n) / L);
    const double nf = es.norm_factors[i];
    rep.norm_trend[i] = nf * nf * (L / 2.0);
    rep.max_residual = std::max(rep.max_residual, rep.residuals[i]);
  }
  return rep;
}

std::vector<RobinBoundState> robin_bound_states(const BoundaryCondition& bc) {
  if (bc.kind != BcKind::Robin) return {};
  const double alpha = bc.alpha, beta = bc.beta, L = bc.length;
  // q scaled by e^{-kappa L} keeps the magnitude tame; sign is unchanged
  auto q = [&](double kappa) {
    const double sh = -std::expm1(-2.0 * kappa * L) * 0.5;
    const double ch = (1.0 + std::exp(-2.0 * kappa * L)) * 0.5;
    return sh * (kappa * kappa - alpha * beta) + kappa * ch * (beta - alpha);
  };
  const double kmax = 4.0 * (1.0 + std::abs(alpha) + std::abs(beta)) * (1.0 + 1.0 / L);
  const int steps = 200000;
  std::vector<double> roots;
  double prev_k = kmax * 1e-9;
  double prev_q = q(prev_k);
  for (int i = 1; i <= steps; ++i) {
    const double kappa = kmax * i / steps;
    const double qq = q(kappa);
    if (qq == 0.0) {
      roots.push_back(kappa);
    } else if (qq * prev_q < 0.0) {
      double lo = prev_k, hi = kappa, flo = prev_q;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = q(mid);
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_k = kappa;
    prev_q = qq;
  }
  std::vector<RobinBoundState> out;
  for (double kappa : roots) {
    if (kappa < 1e-12) continue;
    RobinBoundState s;
    s.kappa = kappa;
    s.lambda = -0.5 * kappa * kappa;
    const double s2 = std::sinh(2.0 * kappa * L);
    const double sL = std::sinh(kappa * L);
    const double i_cc = 0.5 * L + s2 / (4.0 * kappa);
    const double i_ss = -0.5 * L + s2 / (4.0 * kappa);
    const double i_cs = sL * sL / (2.0 * kappa);
    const double a_over = alpha / kappa;
    const double norm_sq = i_cc + a_over * a_over * i_ss - 2.0 * a_over * i_cs;
    s.norm_factor = 1.0 / std::sqrt(norm_sq);
    out.push_back(s);
  }
  return out;
}

double robin_root_residual(const EigenSystem& es, int n) {
  if (es.bc.kind != BcKind::Robin)
    throw std::invalid_argument("robin_root_residual: Robin-only");
  if (n < 1 || n > es.count) throw std::out_of_range("robin_root_residual: bad index");
  const std::size_t i = static_cast<std::size_t>(n - 1);
  if (es.robin_branch[i] < 0)
    return 0.0;  // affine zero mode, not a positive root
  const long double L = es.bc.length;
  const long double alpha = es.bc.alpha, beta = es.bc.beta;
  const int k = es.robin_branch[i];
  const long double phi = es.robin_phi[i];
  const long double eta = (kPiL * k + phi) / L;
  // g(eta) = (-1)^k [ sin(phi)(eta^2+ab) - cos(phi)(b-a) eta ]
  const long double g =
      std::sin(phi) * (eta * eta + alpha * beta) -
      std::cos(phi) * (beta - alpha) * eta;
  return std::abs(static_cast<double>(g));
}

}  // namespace spdelab
