// Benchmark of the OpenMP execution paths against the serial reference:
// the covariance-oracle mode-sum kernel and the replicate loops (sampler and
// coupled solver). Verifies the bit-identical contract while timing.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "spdelab/gaussian_field.hpp"
#include "spdelab/nonlinear_solver.hpp"
#include "spdelab/parallel.hpp"

using namespace spdelab;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <class Fn>
double timed(Fn&& fn) {
  const double t0 = now_seconds();
  fn();
  return now_seconds() - t0;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s serial %7.3fs   openmp %7.3fs   speedup %.2fx   %s\n", name,
              serial, parallel, serial / parallel,
              identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 0;
  const RunContext serial{Exec::Serial, 1};
  const RunContext par{Exec::OpenMP, threads};
  std::printf("threads: %d\n", effective_threads(threads));

  // oracle mode-sum kernel
  {
    const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64, 64);
    CovarianceOracle os(es, 16777216), op(es, 16777216);
    os.set_run_context(serial);
    op.set_run_context(par);
    const SpaceTimePoint a{0.5, 0.43}, b{0.5 + 1e-8, 0.43 + 1e-4};
    double vs = 0, vp = 0;
    const double ts = timed([&] {
      for (int i = 0; i < 6; ++i) vs += os.var_increment(a, b);
    });
    const double tp = timed([&] {
      for (int i = 0; i < 6; ++i) vp += op.var_increment(a, b);
    });
    report("oracle mode sum (2^24)", ts, tp, vs == vp);
  }

  // sampler replicates
  {
    const EigenSystem es = build_eigensystem(BoundaryCondition::dirichlet(1.0), 128);
    std::vector<double> times, xs;
    for (int i = 1; i <= 64; ++i) times.push_back(0.005 * i);
    for (int j = 0; j < 32; ++j) xs.push_back((j + 0.5) / 32);
    const int reps = 2000;
    std::vector<double> out_s(reps), out_p(reps);
    const double ts = timed([&] {
      for_each_replicate(reps, serial, [&](std::int64_t r) {
        const FieldPath p = sample_w(es, 128, times, xs, 7, static_cast<std::uint64_t>(r), false);
        out_s[static_cast<std::size_t>(r)] = p.values.back();
      });
    });
    const double tp = timed([&] {
      for_each_replicate(reps, par, [&](std::int64_t r) {
        const FieldPath p = sample_w(es, 128, times, xs, 7, static_cast<std::uint64_t>(r), false);
        out_p[static_cast<std::size_t>(r)] = p.values.back();
      });
    });
    report("sampler replicates", ts, tp, out_s == out_p);
  }

  // coupled solver replicates
  {
    const EigenSystem es = build_eigensystem(BoundaryCondition::neumann(1.0), 64);
    SchemeConfig cfg;
    cfg.es = &es;
    cfg.dt = 5e-4;
    cfg.cells = 128;
    cfg.modes = 64;
    Coefficients co;
    co.b = [](double v) { return std::cos(v); };
    co.sigma = [](double v) { return 2.0 + std::sin(v); };
    RecordSpec rec;
    rec.probes = {{200, 64}};
    const int reps = 400;
    std::vector<double> out_s(reps), out_p(reps);
    const double ts = timed([&] {
      for_each_replicate(reps, serial, [&](std::int64_t r) {
        const PathWindow w = solve_coupled_window(cfg, co, {}, 0.1, rec, 3,
                                                  static_cast<std::uint64_t>(r));
        out_s[static_cast<std::size_t>(r)] = w.probe_u[0];
      });
    });
    const double tp = timed([&] {
      for_each_replicate(reps, par, [&](std::int64_t r) {
        const PathWindow w = solve_coupled_window(cfg, co, {}, 0.1, rec, 3,
                                                  static_cast<std::uint64_t>(r));
        out_p[static_cast<std::size_t>(r)] = w.probe_u[0];
      });
    });
    report("coupled solver replicates", ts, tp, out_s == out_p);
  }
  return 0;
}
