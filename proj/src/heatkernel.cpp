#include "spdelab/heatkernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spdelab {

KernelEvaluator::KernelEvaluator(const EigenSystem& es, double tail_tolerance)
    : es_(&es), tol_(tail_tolerance) {
  if (!(tail_tolerance > 0.0))
    throw std::invalid_argument("KernelEvaluator: tail_tolerance must be > 0");
  if (es.count < 2)
    throw std::invalid_argument("KernelEvaluator: need at least 2 modes");
  sup_f_ = es.sup_mode_bound();
  c_lambda_ = es.lambda_growth_lower();
}

int KernelEvaluator::modes_for(double t) const {
  if (!(t > 0.0))
    throw std::domain_error("KernelEvaluator: t must be > 0 (series diverges at 0)");
  // geometric tail: sum_{n>N} e^{-lambda_n t} F^2 <= N_max F^2 e^{-c N^2 t}
  const double f2 = sup_f_ * sup_f_;
  const double arg = std::log(f2 * es_->count / tol_);
  int n = 1;
  if (arg > 0.0)
    n = static_cast<int>(std::ceil(std::sqrt(arg / (c_lambda_ * t))));
  n = std::max(n, 1);
  if (n > es_->count)
    throw std::domain_error(
        "KernelEvaluator: t = " + std::to_string(t) + " requires N = " +
        std::to_string(n) + " modes but only " + std::to_string(es_->count) +
        " were built");
  return n;
}

double KernelEvaluator::eval(double t, double x, double y) const {
  const int n_used = modes_for(t);
  double s = 0.0;
  for (int n = 1; n <= n_used; ++n) {
    const double lam = es_->lambdas[static_cast<std::size_t>(n - 1)];
    // product first: IEEE multiplication commutes, so G is bitwise symmetric
    const double fxy = es_->mode(n, x) * es_->mode(n, y);
    s += std::exp(-lam * t) * fxy;
  }
  return s;
}

double KernelEvaluator::flow(const InitialData& u0, double t, double x) const {
  if (t == 0.0) return u0.u0(x);
  const int n_used = modes_for(t);
  const int n_cap = std::min<int>(n_used, static_cast<int>(u0.coefficients.size()));
  double s = 0.0;
  for (int n = 1; n <= n_cap; ++n) {
    const double lam = es_->lambdas[static_cast<std::size_t>(n - 1)];
    s += std::exp(-lam * t) * u0.coefficients[static_cast<std::size_t>(n - 1)] *
         es_->mode(n, x);
  }
  return s;
}

}  // namespace spdelab
