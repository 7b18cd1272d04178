#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace spdelab {

enum class BcKind { Dirichlet, Neumann, Robin };

// Boundary condition for -1/2 d^2/dx^2 on (0, L). Robin means
// u' + alpha u = 0 at x = 0 and u' + beta u = 0 at x = L.
struct BoundaryCondition {
  BcKind kind = BcKind::Dirichlet;
  double alpha = 0.0;  // Robin only
  double beta = 0.0;   // Robin only
  double length = 1.0;

  static BoundaryCondition dirichlet(double L) {
    return {BcKind::Dirichlet, 0.0, 0.0, L};
  }
  static BoundaryCondition neumann(double L) {
    return {BcKind::Neumann, 0.0, 0.0, L};
  }
  static BoundaryCondition robin(double a, double b, double L) {
    return {BcKind::Robin, a, b, L};
  }

  void validate() const {
    if (!(length > 0.0) || !std::isfinite(length))
      throw std::invalid_argument("boundary condition: length must be > 0, got " +
                                  std::to_string(length));
    if (!std::isfinite(alpha) || !std::isfinite(beta))
      throw std::invalid_argument("boundary condition: alpha/beta must be finite");
  }

  // Zero is an eigenvalue for Neumann, and for Robin iff alpha = beta/(1+beta L)
  // (stated denominator-cleared so beta = -1/L is handled).
  bool has_zero_mode() const {
    if (kind == BcKind::Neumann) return true;
    if (kind != BcKind::Robin) return false;
    const double scale = std::max({1.0, std::abs(alpha), std::abs(beta)});
    return std::abs(alpha * (1.0 + beta * length) - beta) < 1e-12 * scale;
  }

  std::string describe() const {
    switch (kind) {
      case BcKind::Dirichlet: return "dirichlet(L=" + std::to_string(length) + ")";
      case BcKind::Neumann: return "neumann(L=" + std::to_string(length) + ")";
      default:
        return "robin(alpha=" + std::to_string(alpha) +
               ",beta=" + std::to_string(beta) + ",L=" + std::to_string(length) + ")";
    }
  }
};

}  // namespace spdelab
