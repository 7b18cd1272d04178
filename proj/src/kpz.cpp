#include "spdelab/kpz.hpp"

#include <cmath>
#include <stdexcept>

namespace spdelab {

BoundaryCondition robin_from_kpz(double mu, double nu) {
  return BoundaryCondition::robin(0.5 - mu, nu - 0.5, 1.0);
}

void KPZConfig::validate() const {
  scheme.validate();
  if (scheme.es->bc.length != 1.0)
    throw std::invalid_argument("KPZConfig: the open KPZ equation lives on [0, 1]");
  if (scheme.es->bc.kind != BcKind::Robin)
    throw std::invalid_argument("KPZConfig: scheme must use the induced Robin condition");
  const BoundaryCondition expected = robin_from_kpz(mu, nu);
  if (std::abs(scheme.es->bc.alpha - expected.alpha) > 1e-12 ||
      std::abs(scheme.es->bc.beta - expected.beta) > 1e-12)
    throw std::invalid_argument(
        "KPZConfig: eigen-system boundary condition does not match (mu, nu)");
  if (!u0) throw std::invalid_argument("KPZConfig: u0 required");
  const double dx = scheme.dx();
  for (int j = 0; j < scheme.cells; ++j)
    if (!(u0((j + 0.5) * dx) > 0.0))
      throw std::invalid_argument("KPZConfig: u0 must be strictly positive on the grid");
  if (!(positivity_floor > 0.0))
    throw std::invalid_argument("KPZConfig: positivity_floor must be > 0");
}

KpzPathWindow solve_kpz_window(const KPZConfig& cfg, double horizon,
                               const RecordSpec& record, std::uint64_t seed,
                               std::uint64_t replicate) {
  Coefficients pam;
  pam.b = [](double) { return 0.0; };
  pam.sigma = [](double v) { return v; };
  pam.b_lipschitz = 0.0;
  pam.sigma_lipschitz = 1.0;
  pam.b_bounded = true;
  pam.sigma_bounded = false;  // multiplicative noise, flagged unbounded

  const std::vector<double> u0_coeffs = expand_function(*cfg.scheme.es, cfg.u0);
  KpzPathWindow out;
  out.win = solve_coupled_window(cfg.scheme, pam, u0_coeffs, horizon, record,
                                 seed, replicate, cfg.u0);
  out.min_u = out.win.min_u;
  out.excluded = !(out.min_u > cfg.positivity_floor);
  if (!out.excluded) {
    for (double& v : out.win.u) v = std::log(v);
    for (double& v : out.win.probe_u) v = std::log(v);
  }
  return out;
}

}  // namespace spdelab
