#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spdelab/nonlinear_solver.hpp"

namespace spdelab {

// Boundary slopes d_x h(t,0) = mu, d_x h(t,1) = -nu of the open KPZ equation
// induce the Robin condition u' = (mu - 1/2) u at 0 and u' = -(nu - 1/2) u at 1
// on the Hopf-Cole transformed equation; matching u' + alpha u = 0 gives
// alpha = 1/2 - mu, beta = nu - 1/2 on the unit interval.
BoundaryCondition robin_from_kpz(double mu, double nu);

struct KPZConfig {
  double mu = 0.5;
  double nu = 0.5;
  SchemeConfig scheme;  // must be built on robin_from_kpz(mu, nu) with L = 1
  std::function<double(double)> u0;  // strictly positive on the grid
  double positivity_floor = 1e-12;

  void validate() const;
};

// One Hopf-Cole path: h = log u on the recorded window, next to the coupled
// linear field w. Paths whose minimum of u drops to the positivity floor are
// excluded (never clamped) and only counted.
struct KpzPathWindow {
  PathWindow win;     // win.u holds h = log u when included
  bool excluded = false;
  double min_u = 0.0;
};

KpzPathWindow solve_kpz_window(const KPZConfig& cfg, double horizon,
                               const RecordSpec& record, std::uint64_t seed,
                               std::uint64_t replicate);

struct KpzRunReport {
  int reps = 0;
  int excluded = 0;
  double exclusion_fraction() const {
    return reps == 0 ? 0.0 : static_cast<double>(excluded) / reps;
  }
  // exit-code-2 condition: more than 20% of paths lost positivity
  bool failed() const { return exclusion_fraction() > 0.20; }
};

}  // namespace spdelab
