#pragma once

#include <functional>
#include <vector>

#include "spdelab/spectral.hpp"

namespace spdelab {

// Deterministic initial data together with its modal coefficients.
struct InitialData {
  std::function<double(double)> u0;
  std::vector<double> coefficients;  // <u0, f_n>
  bool bounded = false;
  bool lipschitz_near_target = false;

  static InitialData from_function(const EigenSystem& es,
                                   std::function<double(double)> f,
                                   bool bounded = true,
                                   bool lipschitz = false) {
    InitialData d;
    d.u0 = std::move(f);
    d.coefficients = expand_function(es, d.u0);
    d.bounded = bounded;
    d.lipschitz_near_target = lipschitz;
    return d;
  }
};

// Truncated heat-kernel series G_t(x,y) = sum_n e^{-lambda_n t} f_n(x) f_n(y),
// with the truncation level chosen per t so the analytic tail bound stays
// below tail_tolerance. Immutable and thread-safe after construction.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(const EigenSystem& es, double tail_tolerance = 1e-10);

  // number of modes needed at time t; throws if it exceeds the built count,
  // reporting the required N
  int modes_for(double t) const;

  double eval(double t, double x, double y) const;

  // (G_t * u0)(x); t = 0 evaluates u0 directly
  double flow(const InitialData& u0, double t, double x) const;

  const EigenSystem& eigensystem() const { return *es_; }
  double tail_tolerance() const { return tol_; }

 private:
  const EigenSystem* es_;
  double tol_;
  double sup_f_;      // F with sup|f_n| <= F
  double c_lambda_;   // lambda_n >= c n^2
};

}  // namespace spdelab
