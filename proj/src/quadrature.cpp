#include "spdelab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace spdelab {

// Nodes are the roots of the Legendre polynomial P_n, found by Newton
// iteration from the Chebyshev-like initial guess; weights 2/((1-x^2) P_n'^2).
QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  if (order > 20000) throw std::invalid_argument("gauss_legendre: order too large");

  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));

  const int n = order;
  const int half = (n + 1) / 2;
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        // one more pass so dp matches the converged x
        p0 = 1.0;
        p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    rule.nodes[static_cast<std::size_t>(i)] = mid - hw * x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = mid + hw * x;
    rule.weights[static_cast<std::size_t>(i)] = hw * w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = hw * w;
  }
  return rule;
}

}  // namespace spdelab
