#pragma once

#include <algorithm>
#include <cmath>

namespace spdelab {

struct SpaceTimePoint {
  double t = 0.0;  // >= 0
  double x = 0.0;  // in [0, L]
};

// parabolic metric rho((t,x),(s,y)) = max(|t-s|^{1/4}, |x-y|^{1/2})
inline double rho(const SpaceTimePoint& a, const SpaceTimePoint& b) {
  const double dt = std::sqrt(std::sqrt(std::abs(a.t - b.t)));
  const double dx = std::sqrt(std::abs(a.x - b.x));
  return std::max(dt, dx);
}

struct ParabolicBall {
  SpaceTimePoint center;
  double radius = 0.0;
  bool punctured = false;

  // membership intersected with [0,inf) x [0,L]
  bool contains(const SpaceTimePoint& z, double length) const {
    if (z.t < 0.0 || z.x < 0.0 || z.x > length) return false;
    const double r = rho(center, z);
    if (punctured && r == 0.0) return false;
    return r <= radius;
  }
};

}  // namespace spdelab
