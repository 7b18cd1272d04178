#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "spdelab/boundary.hpp"
#include "spdelab/quadrature.hpp"

namespace spdelab {

// Eigen-system of -1/2 d^2/dx^2 on (0, L) under a boundary condition:
// eigenvalues lambda_n = eta_n^2 / 2 ascending, L2-normalized eigenfunctions
// f_n = norm_factor_n * e_n. Immutable after build; evaluation is pure.
//
// Sign convention: f_n(0+) > 0 where nonzero, f_n'(0) > 0 under Dirichlet.
// The closed forms already satisfy this.
struct EigenSystem {
  BoundaryCondition bc;
  int count = 0;
  std::vector<double> lambdas;       // ascending, >= 0
  std::vector<double> etas;          // frequency roots, lambda = eta^2/2
  std::vector<double> norm_factors;  // 1/||e_n||_{L2}
  QuadratureRule quadrature;         // on [0, L]

  // Robin roots kept in branch/offset form eta = (pi*k + phi)/L; phi refined
  // in long double so the characteristic residual can be evaluated below
  // double-quantization noise. Empty for Dirichlet/Neumann.
  std::vector<int> robin_branch;
  std::vector<long double> robin_phi;

  // f_n(x), 1-based n in [1, count], x in [0, L]
  double mode(int n, double x) const;
  // analytic f_n'(x)
  double mode_deriv(int n, double x) const;
  // analytic f_n''(x) (equals -2 lambda_n f_n by construction)
  double mode_deriv2(int n, double x) const;

  // upper bound on sup_n sup_x |f_n(x)| over built modes
  double sup_mode_bound() const;
  // c with lambda_n >= c n^2 over built modes (n >= 2)
  double lambda_growth_lower() const;

  bool has_zero_mode() const { return count > 0 && lambdas[0] < 1e-12; }
};

// Builds the eigen-system with `count` modes. quad_order <= 0 selects the
// default max(4*count, 64) Gauss-Legendre nodes on [0, L].
EigenSystem build_eigensystem(const BoundaryCondition& bc, int count,
                              int quad_order = 0);

// Coefficients <phi, f_n> for n = 1..count via the stored quadrature.
std::vector<double> expand_function(const EigenSystem& es,
                                    const std::function<double(double)>& phi);

struct RobinAsymptoticsReport {
  int n0 = 0;                        // integer shift: eta_n ~ pi (n0 + n) / L
  std::vector<double> residuals;     // n * |eta_n - pi (n0 + n) / L|
  std::vector<double> norm_trend;    // ||e_n||^{-2} * (L/2), expected -> 1
  double max_residual = 0.0;
};

// Tail estimate of the Robin frequency shift and its residuals. Robin-only,
// requires count >= 16.
RobinAsymptoticsReport robin_asymptotics_check(const EigenSystem& es);

// Characteristic residual g(eta) = sin(eta L)(eta^2 + alpha beta)
//                                 - cos(eta L)(beta - alpha) eta
// evaluated at stored root n (1-based, positive-eta roots only), using the
// long-double branch/offset representation.
double robin_root_residual(const EigenSystem& es, int n);

// Robin configurations can bind up to two boundary states with negative
// eigenvalues, e(x) = cosh(kappa x) - (alpha/kappa) sinh(kappa x) and
// lambda = -kappa^2/2 at the positive roots of
//   q(kappa) = sinh(kappa L)(kappa^2 - alpha beta)
//            + kappa cosh(kappa L)(beta - alpha).
// They lie outside the nonnegative-root eigen-system above but complete the
// L2 basis; the solver includes them so the semigroup (and positivity of the
// multiplicative equation) is represented faithfully.
struct RobinBoundState {
  double kappa = 0.0;
  double lambda = 0.0;       // -kappa^2/2
  double norm_factor = 0.0;  // 1/||e||_{L2}

  double eval(double x, double alpha) const {
    return norm_factor *
           (std::cosh(kappa * x) - (alpha / kappa) * std::sinh(kappa * x));
  }
};

std::vector<RobinBoundState> robin_bound_states(const BoundaryCondition& bc);

}  // namespace spdelab
