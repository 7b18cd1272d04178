#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spdelab/estimators.hpp"
#include "spdelab/nonlinear_solver.hpp"
#include "spdelab/parallel.hpp"

using namespace spdelab;

namespace {

SchemeConfig small_config(const EigenSystem& es, double dt = 1e-3, int cells = 64,
                          int modes = 32) {
  SchemeConfig cfg;
  cfg.es = &es;
  cfg.dt = dt;
  cfg.cells = cells;
  cfg.modes = modes;
  return cfg;
}

}  // namespace

TEST_CASE("b=0, sigma=0 reduces to the exact deterministic flow") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 64);
  const SchemeConfig cfg = small_config(es);
  Coefficients zero;
  zero.b = [](double) { return 0.0; };
  zero.sigma = [](double) { return 0.0; };
  std::vector<double> u0(32, 0.0);
  u0[1] = 1.0;  // start on f_2
  const CoupledPaths paths = solve_coupled(cfg, zero, u0, 0.05, 42);
  const std::size_t last = paths.times.size() - 1;
  for (std::size_t j = 0; j < paths.xs.size(); j += 7) {
    const double expected =
        std::exp(-es.lambdas[1] * 0.05) * es.mode(2, paths.xs[j]);
    CHECK(paths.u_at(last, j) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("sigma=0, b=1, Neumann: u(t,x) = t (ODE limit)") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  const SchemeConfig cfg = small_config(es);
  Coefficients drift;
  drift.b = [](double) { return 1.0; };
  drift.sigma = [](double) { return 0.0; };
  const CoupledPaths paths = solve_coupled(cfg, drift, {}, 0.1, 1);
  const std::size_t last = paths.times.size() - 1;
  for (std::size_t j = 0; j < paths.xs.size(); ++j)
    CHECK(paths.u_at(last, j) == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("additive pair: u and w coincide bit-for-bit") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::robin(1.0, 2.0, 1.0), 48);
  const SchemeConfig cfg = small_config(es, 1e-3, 48, 24);
  const CoupledPaths paths =
      solve_coupled(cfg, Coefficients::additive(), {}, 0.05, 7);
  CHECK(paths.u == paths.w);
}

TEST_CASE("same seed gives bit-identical paths") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 48);
  const SchemeConfig cfg = small_config(es, 1e-3, 48, 24);
  Coefficients c;
  c.b = [](double v) { return std::cos(v); };
  c.sigma = [](double v) { return 2.0 + std::sin(v); };
  const CoupledPaths a = solve_coupled(cfg, c, {}, 0.05, 11, 3);
  const CoupledPaths b = solve_coupled(cfg, c, {}, 0.05, 11, 3);
  CHECK(a.u == b.u);
  CHECK(a.noise == b.noise);
  const CoupledPaths other = solve_coupled(cfg, c, {}, 0.05, 11, 4);
  CHECK(a.u != other.u);
}

TEST_CASE("scheme validation gate at unit scale: additive field matches the oracle") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  const CovarianceOracle oracle(es, 32);  // compare within the scheme's modal space
  SchemeConfig cfg = small_config(es, 5e-4, 128, 32);
  const double horizon = 0.1;
  const std::vector<std::int64_t> steps{200};  // t = 0.1
  const std::vector<std::pair<std::int64_t, int>> probes{
      {100, 32}, {100, 64}, {200, 32}, {200, 96}, {200, 64}};
  RecordSpec rec;
  rec.steps = {};
  rec.probes = probes;
  const int reps = 4000;
  std::vector<std::vector<double>> vals(
      probes.size(), std::vector<double>(static_cast<std::size_t>(reps)));
  RunContext ctx{Exec::OpenMP, 2};
  for_each_replicate(reps, ctx, [&](std::int64_t r) {
    const PathWindow w =
        solve_coupled_window(cfg, Coefficients::additive(), {}, horizon, rec, 99,
                             static_cast<std::uint64_t>(r));
    for (std::size_t p = 0; p < probes.size(); ++p)
      vals[p][static_cast<std::size_t>(r)] = w.probe_w[p];
  });
  const double dx = cfg.dx();
  for (std::size_t p = 0; p < probes.size(); ++p) {
    double s2 = 0.0;
    for (double v : vals[p]) s2 += v * v;
    const double var_hat = s2 / reps;
    const SpaceTimePoint z{static_cast<double>(probes[p].first) * cfg.dt,
                           (probes[p].second + 0.5) * dx};
    const double var = oracle.variance(z);
    const double se = var * std::sqrt(2.0 / reps);
    // 4 SE: the modal-space cap makes the target exact up to O(dt) bias
    CHECK(std::abs(var_hat - var) < 4.0 * se);
  }
}

TEST_CASE("linearization error basics") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 48);
  const SchemeConfig cfg = small_config(es, 1e-3, 48, 24);

  SUBCASE("z = z' gives exactly zero") {
    Coefficients c;
    c.b = [](double v) { return std::cos(v); };
    c.sigma = [](double v) { return 2.0 + std::sin(v); };
    const CoupledPaths paths = solve_coupled(cfg, c, {}, 0.05, 13);
    CHECK(linearization_error(paths, c, 10, 5, 10, 5) == 0.0);
  }

  SUBCASE("constant sigma, b = 0 vanishes to solver tolerance") {
    Coefficients c;
    c.b = [](double) { return 0.0; };
    c.sigma = [](double) { return 3.0; };
    const CoupledPaths paths = solve_coupled(cfg, c, {}, 0.05, 13);
    for (std::size_t dt : {1u, 10u})
      for (std::size_t dxs : {1u, 7u}) {
        const double e = linearization_error(paths, c, 20, 10, 20 + dt, 10 + dxs);
        CHECK(std::abs(e) < 1e-10);
      }
  }

  SUBCASE("off-grid points are rejected") {
    Coefficients c = Coefficients::additive();
    const CoupledPaths paths = solve_coupled(cfg, c, {}, 0.05, 13);
    CHECK_THROWS_AS(linearization_error(paths, c, 10, 5, 1000, 5), std::out_of_range);
  }
}

TEST_CASE("flow term enters the linearization error") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 48);
  const SchemeConfig cfg = small_config(es, 1e-3, 48, 24);
  Coefficients c;
  c.b = [](double) { return 0.0; };
  c.sigma = [](double) { return 1.0; };
  std::vector<double> u0(24, 0.0);
  u0[0] = 2.0;
  const CoupledPaths paths = solve_coupled(cfg, c, u0, 0.05, 21);
  // with sigma = 1 and the same noise, u = flow + w exactly, so E = 0
  for (std::size_t ti : {5u, 30u})
    for (std::size_t xi : {8u, 25u}) {
      const double e = linearization_error(paths, c, ti, xi, ti + 10, xi + 3);
      CHECK(std::abs(e) < 1e-9);
    }
}

TEST_CASE("moment growth stays Gaussian-like for bounded coefficients") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  SchemeConfig cfg = small_config(es, 1e-3, 64, 32);
  Coefficients c;
  c.b = [](double v) { return std::cos(v); };
  c.sigma = [](double v) { return 2.0 + std::sin(v); };
  c.b_bounded = c.sigma_bounded = true;
  const int reps = 2000;
  RecordSpec rec;
  rec.probes = {{100, 32}};
  std::vector<double> vals(static_cast<std::size_t>(reps));
  RunContext ctx{Exec::OpenMP, 2};
  for_each_replicate(reps, ctx, [&](std::int64_t r) {
    const PathWindow w = solve_coupled_window(cfg, c, {}, 0.1, rec, 5,
                                              static_cast<std::uint64_t>(r));
    vals[static_cast<std::size_t>(r)] = w.probe_u[0];
  });
  const std::vector<int> ks{2, 8};
  const std::vector<double> norms = moment_norms(vals, ks);
  CHECK(norms[1] / norms[0] <= 2.5);
}

TEST_CASE("degenerate configurations are rejected") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 32);
  SchemeConfig cfg = small_config(es);
  cfg.dt = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config(es);
  cfg.modes = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_config(es);
  cfg.modes = 64;  // exceeds built count
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  // horizon must be a step multiple
  const SchemeConfig ok = small_config(es);
  CHECK_THROWS_AS(solve_coupled(ok, Coefficients::additive(), {}, 0.0505, 1),
                  std::invalid_argument);
}

TEST_CASE("declared Lipschitz constants are spot-checked") {
  Coefficients bad;
  bad.b = [](double v) { return v * v; };  // not Lipschitz on [-10, 10] with L=1
  bad.sigma = [](double) { return 1.0; };
  bad.b_lipschitz = 1.0;
  bad.sigma_lipschitz = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Coefficients good;
  good.b = [](double v) { return std::cos(v); };
  good.sigma = [](double v) { return 2.0 + std::sin(v); };
  CHECK_NOTHROW(good.validate());
}

TEST_CASE("exploding path aborts with a step diagnostic") {
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 32);
  const SchemeConfig cfg = small_config(es, 1e-3, 32, 16);
  Coefficients blow;
  blow.b = [](double) { return 0.0; };
  blow.sigma = [](double v) { return 1e12 * (1.0 + std::abs(v)); };
  CHECK_THROWS_WITH_AS(solve_coupled(cfg, blow, {}, 0.1, 3),
                       doctest::Contains("at step"), std::runtime_error);
}

TEST_CASE("u-increment scaling exponents") {
  // ||u(t,x') - u(t,x)||_2 ~ |x'-x|^(1/2), ||u(t',x) - u(t,x)||_2 ~ |t'-t|^(1/4)
  const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
  SchemeConfig cfg;
  cfg.es = &es;
  cfg.dt = 5e-4;
  cfg.cells = 128;
  cfg.modes = 64;
  Coefficients c;
  c.b = [](double v) { return std::cos(v); };
  c.sigma = [](double v) { return 2.0 + std::sin(v); };
  const std::int64_t k0 = 160;  // t* = 0.08
  const int c0 = 36;
  const std::vector<int> sp{1, 2, 4, 8, 16, 32};        // cells
  const std::vector<std::int64_t> tp{1, 3, 9, 27, 81, 240};  // steps
  RecordSpec rec;
  rec.probes.push_back({k0, c0});
  for (int m : sp) rec.probes.push_back({k0, c0 + m});
  for (std::int64_t k : tp) rec.probes.push_back({k0 + k, c0});
  const int reps = 1500;
  std::vector<std::vector<double>> pu(rec.probes.size(),
                                      std::vector<double>(static_cast<std::size_t>(reps)));
  RunContext ctx{Exec::OpenMP, 2};
  const double horizon = (k0 + 240) * cfg.dt;
  for_each_replicate(reps, ctx, [&](std::int64_t r) {
    const PathWindow w = solve_coupled_window(cfg, c, {}, horizon, rec, 505,
                                              static_cast<std::uint64_t>(r));
    for (std::size_t p = 0; p < rec.probes.size(); ++p)
      pu[p][static_cast<std::size_t>(r)] = w.probe_u[p];
  });
  auto inc_norm = [&](std::size_t p) {
    double acc = 0;
    for (int r = 0; r < reps; ++r) {
      const double d = pu[p][static_cast<std::size_t>(r)] -
                       pu[0][static_cast<std::size_t>(r)];
      acc += d * d;
    }
    return std::sqrt(acc / reps);
  };
  std::vector<double> xs, nx, ts2, nt2;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    xs.push_back(sp[i] / 128.0);
    nx.push_back(inc_norm(1 + i));
  }
  for (std::size_t i = 0; i < tp.size(); ++i) {
    ts2.push_back(tp[i] * cfg.dt);
    nt2.push_back(inc_norm(1 + sp.size() + i));
  }
  const ExponentFit fx = fit_exponent(xs, nx);
  const ExponentFit ft = fit_exponent(ts2, nt2);
  CHECK(fx.slope == doctest::Approx(0.5).epsilon(0.2));   // 0.5 +- 0.1
  CHECK(ft.slope == doctest::Approx(0.25).epsilon(0.2));  // 0.25 +- 0.05
}
