#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/heatkernel.hpp"
#include "spdelab/rng.hpp"

using namespace spdelab;

TEST_CASE("Neumann kernel conserves mass") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 256);
  const KernelEvaluator ke(es, 1e-10);
  const QuadratureRule q = gauss_legendre(400, 0.0, 1.0);
  for (double t : {0.01, 0.1, 1.0})
    for (double x : {0.1, 0.5, 0.93}) {
      const double mass = q.integrate([&](double y) { return ke.eval(t, x, y); });
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("Dirichlet kernel vanishes on the boundary, mass <= 1") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 256);
  const KernelEvaluator ke(es, 1e-10);
  for (double y : {0.2, 0.5, 0.8}) CHECK(std::abs(ke.eval(0.05, 0.0, y)) < 1e-8);
  const QuadratureRule q = gauss_legendre(400, 0.0, 1.0);
  for (double t : {0.02, 0.3})
    for (double x : {0.25, 0.6}) {
      const double mass = q.integrate([&](double y) { return ke.eval(t, x, y); });
      CHECK(mass <= 1.0 + 1e-8);
    }
}

TEST_CASE("kernel is symmetric and positive on the test grid") {
  // Robin pair in the purely nonnegative-spectrum regime (-alpha >= 0, beta >= 0
  // keeps the quadratic form positive); pairs with a bound state fall outside
  // the nonnegative-root series and are not positivity-testable.
  const EigenSystem es = build_eigensystem(BoundaryCondition::robin(-1.0, 2.0, 1.0), 256);
  const KernelEvaluator ke(es, 1e-10);
  for (double t : {0.01, 0.1})
    for (double x : {0.1, 0.4, 0.9})
      for (double y : {0.2, 0.7}) {
        CHECK(ke.eval(t, x, y) == ke.eval(t, y, x));
        CHECK(ke.eval(t, x, y) >= -1e-8);
      }
}

TEST_CASE("Chapman-Kolmogorov at random points") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 256);
  const KernelEvaluator ke(es, 1e-12);
  const QuadratureRule q = gauss_legendre(300, 0.0, 1.0);
  RngStream rng = RngStream::keyed(11, 0);
  for (int i = 0; i < 5; ++i) {
    const double t = 0.05 + 0.3 * rng.uniform();
    const double s = 0.05 + 0.3 * rng.uniform();
    const double x = 0.1 + 0.8 * rng.uniform();
    const double y = 0.1 + 0.8 * rng.uniform();
    const double conv =
        q.integrate([&](double z) { return ke.eval(t, x, z) * ke.eval(s, z, y); });
    CHECK(std::abs(conv - ke.eval(t + s, x, y)) < 1e-6);
  }
}

TEST_CASE("kernel bound of the form C min(1/sqrt(t), t/|x-y|^3)") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 512);
  const KernelEvaluator ke(es, 1e-10);
  double c_fit = 0.0;
  for (double t : {0.004, 0.01, 0.03, 0.1, 0.3})
    for (int i = 1; i < 20; ++i)
      for (int j = 1; j < 20; ++j) {
        const double x = i / 20.0, y = j / 20.0;
        const double bound =
            std::min(1.0 / std::sqrt(t), t / std::pow(std::abs(x - y) + 1e-300, 3));
        c_fit = std::max(c_fit, ke.eval(t, x, y) / bound);
      }
  CHECK(c_fit > 0.0);
  CHECK(c_fit < 5.0);  // fitted constant is O(1)
  // refinement stability: finer grid moves the fit by < 20%
  double c_fine = 0.0;
  for (double t : {0.004, 0.006, 0.01, 0.02, 0.03, 0.06, 0.1, 0.2, 0.3})
    for (int i = 1; i < 40; ++i)
      for (int j = 1; j < 40; ++j) {
        const double x = i / 40.0, y = j / 40.0;
        const double bound =
            std::min(1.0 / std::sqrt(t), t / std::pow(std::abs(x - y) + 1e-300, 3));
        c_fine = std::max(c_fine, ke.eval(t, x, y) / bound);
      }
  CHECK(c_fine >= c_fit - 1e-12);
  CHECK(c_fine < 1.2 * c_fit);
}

TEST_CASE("adaptive truncation rejects times that need too many modes") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 32);
  const KernelEvaluator ke(es, 1e-12);
  CHECK_THROWS_AS(ke.eval(1e-6, 0.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(ke.eval(0.0, 0.5, 0.5), std::domain_error);
  CHECK_THROWS_AS(ke.eval(-1.0, 0.5, 0.5), std::domain_error);
  CHECK(ke.modes_for(1.0) <= 32);
}

TEST_CASE("flow of an eigenfunction decays at its own rate") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 128);
  const KernelEvaluator ke(es, 1e-12);
  const InitialData u0 =
      InitialData::from_function(es, [&](double x) { return es.mode(2, x); });
  for (double t : {0.0, 0.05, 0.3})
    for (double x : {0.2, 0.55}) {
      const double expected = std::exp(-es.lambdas[1] * t) * es.mode(2, x);
      CHECK(ke.flow(u0, t, x) == doctest::Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("Neumann flow preserves constants") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 128);
  const KernelEvaluator ke(es, 1e-12);
  const InitialData u0 = InitialData::from_function(es, [](double) { return 3.25; });
  for (double t : {0.0, 0.01, 0.5, 2.0})
    for (double x : {0.0, 0.31, 1.0})
      CHECK(ke.flow(u0, t, x) == doctest::Approx(3.25).epsilon(1e-9));
}

TEST_CASE("flow is Lipschitz on [a,b] x [0,L] with a bounded fitted constant") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::robin(1.0, 2.0, 1.0), 256);
  const KernelEvaluator ke(es, 1e-11);
  const InitialData u0 = InitialData::from_function(
      es, [](double x) { return (x < 0.5) ? 1.0 : -0.5; });  // rough initial data
  const double a = 0.1, b = 1.0;
  double cx = 0.0, ct = 0.0;
  for (double t = a; t <= b; t += 0.15) {
    for (int i = 0; i + 1 <= 20; ++i) {
      const double x = i / 20.0, xp = (i + 1) / 20.0;
      cx = std::max(cx, std::abs(ke.flow(u0, t, xp) - ke.flow(u0, t, x)) / (xp - x));
    }
  }
  for (double x : {0.1, 0.5, 0.9})
    for (double t = a; t + 0.05 <= b; t += 0.13)
      ct = std::max(ct, std::abs(ke.flow(u0, t + 0.05, x) - ke.flow(u0, t, x)) / 0.05);
  CHECK(cx < 50.0);
  CHECK(ct < 50.0);
}

TEST_CASE("initial data coefficients agree with expand_function") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 32);
  auto f = [](double x) { return x * (1.0 - x); };
  const InitialData u0 = InitialData::from_function(es, f);
  const std::vector<double> c = expand_function(es, f);
  for (int n = 0; n < 32; ++n)
    CHECK(std::abs(u0.coefficients[n] - c[n]) < 1e-10);
}
