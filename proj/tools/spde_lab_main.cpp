// spde_lab: experiment runner for the SPDE laboratory. Subcommands mirror the
// library modules; every run writes CSV/JSON artifacts plus a manifest and is
// bit-reproducible in (config, seed) at any thread count.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits.h>
#include <unistd.h>

#include "spdelab/acceptance.hpp"
#include "spdelab/csvio.hpp"
#include "spdelab/estimators.hpp"
#include "spdelab/gaussian_field.hpp"
#include "spdelab/heatkernel.hpp"
#include "spdelab/kpz.hpp"
#include "spdelab/nonlinear_solver.hpp"
#include "spdelab/slnd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spdelab;

namespace {

constexpr const char* kVersion = "spde-lab 1.0.0";

struct Common {
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 0;

  RunContext rc() const { return RunContext{Exec::OpenMP, threads}; }
  fs::path dir() const { return fs::path(out); }
};

struct BcFlags {
  std::string bc = "dirichlet";
  double alpha = 0.0, beta = 0.0, length = 1.0;

  BoundaryCondition make() const {
    if (bc == "dirichlet") return BoundaryCondition::dirichlet(length);
    if (bc == "neumann") return BoundaryCondition::neumann(length);
    if (bc == "robin") return BoundaryCondition::robin(alpha, beta, length);
    throw CLI::ValidationError("--bc must be dirichlet|neumann|robin");
  }
  void attach(CLI::App* app) {
    app->add_option("--bc", bc, "boundary condition: dirichlet|neumann|robin");
    app->add_option("--alpha", alpha, "Robin alpha");
    app->add_option("--beta", beta, "Robin beta");
    app->add_option("--length", length, "domain length L");
  }
};

void attach_common(CLI::App* app, Common& c) {
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "64-bit seed");
  app->add_option("--threads", c.threads, "worker threads (0 = auto)");
}

// "a:b:n" -> n equally spaced values from a to b; or comma list
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double a = 0, b = 0;
    long n = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%ld", &a, &b, &n) != 3 || n < 1)
      throw CLI::ValidationError("grid spec must be start:stop:count");
    for (long i = 0; i < n; ++i)
      out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  if (out.empty()) throw CLI::ValidationError("empty grid spec");
  return out;
}

// piecewise-linear table from a two-column CSV (x, f(x))
std::function<double(double)> table_function(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("cannot open table " + path);
  std::vector<double> xs, ys;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || !(std::isdigit(line[0]) || line[0] == '-' || line[0] == '+'))
      continue;
    double x, y;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) == 2) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  if (xs.size() < 2) throw CLI::ValidationError("table needs at least two rows");
  return [xs, ys](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] * (1.0 - w) + ys[i] * w;
  };
}

std::function<double(double)> parse_b(const std::string& spec) {
  if (spec == "zero") return [](double) { return 0.0; };
  if (spec == "cos") return [](double v) { return std::cos(v); };
  if (spec.rfind("table:", 0) == 0) return table_function(spec.substr(6));
  throw CLI::ValidationError("--b must be zero|cos|table:file");
}

std::function<double(double)> parse_sigma(const std::string& spec) {
  if (spec == "one") return [](double) { return 1.0; };
  if (spec == "sin2") return [](double v) { return 2.0 + std::sin(v); };
  if (spec.rfind("affine:", 0) == 0) {
    double a = 0, b = 0;
    if (std::sscanf(spec.c_str(), "affine:%lf:%lf", &a, &b) != 2)
      throw CLI::ValidationError("--sigma affine:a:b");
    return [a, b](double v) { return a + b * v; };
  }
  if (spec.rfind("table:", 0) == 0) return table_function(spec.substr(6));
  throw CLI::ValidationError("--sigma must be one|sin2|affine:a:b|table:file");
}

std::function<double(double)> parse_u0(const std::string& spec) {
  if (spec == "zero") return [](double) { return 0.0; };
  if (spec.rfind("const:", 0) == 0) {
    const double c = std::stod(spec.substr(6));
    return [c](double) { return c; };
  }
  if (spec == "bump")
    return [](double x) {
      if (x <= 0.3 || x >= 0.7) return 0.0;
      const double u = (x - 0.3) / 0.4;
      const double s = std::sin(3.14159265358979323846 * u);
      return s * s * s * s;
    };
  if (spec.rfind("table:", 0) == 0) return table_function(spec.substr(6));
  throw CLI::ValidationError("--u0 must be zero|const:c|bump|table:file");
}

void write_manifest(const Common& c, const std::string& subcommand,
                    const json& config, double wall_seconds) {
  json m;
  m["schema"] = "spde-lab/manifest/1";
  m["version"] = kVersion;
  m["subcommand"] = subcommand;
  m["seed"] = c.seed;
  m["threads"] = c.threads;
  m["config"] = config;
  m["wall_seconds"] = wall_seconds;
  std::ofstream out(c.dir() / "manifest.json");
  out << m.dump(2) << "\n";
}

void write_summary(const Common& c, const std::string& name, const json& body) {
  json j = body;
  j["schema"] = "spde-lab/summary/1";
  std::ofstream out(c.dir() / name);
  out << j.dump(2) << "\n";
}

void write_diagnostic(const Common& c, const std::string& subcommand,
                      const std::string& what) {
  fs::create_directories(c.dir());
  json j;
  j["schema"] = "spde-lab/diagnostic/1";
  j["subcommand"] = subcommand;
  j["error"] = what;
  std::ofstream out(c.dir() / "diagnostic.json");
  out << j.dump(2) << "\n";
}

// archives produced by sample-w / solve for the statistics subcommands
struct SimFlags {
  BcFlags bc;
  int modes = 128;
  std::string t_grid = "0.01:0.5:50";
  std::string x_grid = "0.1:0.9:17";
  int reps = 200;

  void attach(CLI::App* app) {
    bc.attach(app);
    app->add_option("--modes", modes, "spectral modes");
    app->add_option("--t-grid", t_grid, "time grid start:stop:count or list");
    app->add_option("--x-grid", x_grid, "space grid start:stop:count or list");
    app->add_option("--reps", reps, "replicates");
  }
};

PathArchive load_or_sample(const std::string& paths_file, const SimFlags& sim,
                           const Common& common) {
  if (!paths_file.empty()) return PathArchive::load(paths_file);
  const BoundaryCondition bc = sim.bc.make();
  const EigenSystem es = build_eigensystem(bc, sim.modes);
  PathArchive a;
  a.times = parse_grid(sim.t_grid);
  a.xs = parse_grid(sim.x_grid);
  a.reps = sim.reps;
  a.values.assign(static_cast<std::size_t>(a.reps) * a.times.size() * a.xs.size(), 0.0);
  const std::size_t stride = a.times.size() * a.xs.size();
  for_each_replicate(a.reps, common.rc(), [&](std::int64_t rep) {
    const FieldPath p = sample_w(es, sim.modes, a.times, a.xs, common.seed,
                                 static_cast<std::uint64_t>(rep), false);
    std::copy(p.values.begin(), p.values.end(),
              a.values.begin() + static_cast<std::size_t>(rep) * stride);
  });
  return a;
}

std::size_t nearest_index(std::span<const double> grid, double v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs(grid[i] - v) < std::abs(grid[best] - v)) best = i;
  return best;
}

std::string cli_self_path() {
  char buf[PATH_MAX];
  const ssize_t n = readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return "";
  buf[n] = '\0';
  return std::string(buf);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPDE laboratory: eigen-systems, heat kernels, Gaussian fields, "
               "coupled SPDE solvers and path statistics on a bounded interval"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file with [subcommand] sections");
  app.allow_config_extras(false);

  Common common;
  std::string active;
  json config_echo;
  const auto t_start = std::chrono::steady_clock::now();
  std::function<void()> action;

  // ------------------------------------------------------------------ eigen
  {
    auto* cmd = app.add_subcommand("eigen", "build an eigen-system, emit CSV");
    auto bc = std::make_shared<BcFlags>();
    auto modes = std::make_shared<int>(16);
    bc->attach(cmd);
    cmd->add_option("--modes", *modes, "mode count");
    attach_common(cmd, common);
    cmd->callback([&, bc, modes] {
      active = "eigen";
      config_echo = {{"bc", bc->bc},     {"alpha", bc->alpha}, {"beta", bc->beta},
                     {"length", bc->length}, {"modes", *modes}};
      action = [&, bc, modes] {
        const EigenSystem es = build_eigensystem(bc->make(), *modes);
        fs::create_directories(common.dir());
        const std::vector<std::string> hdr{"n", "lambda", "eta", "norm_factor"};
        CsvWriter csv((common.dir() / "eigen.csv").string(), hdr);
        for (int n = 1; n <= es.count; ++n)
          csv.row(std::vector<double>{static_cast<double>(n), es.lambdas[n - 1],
                                      es.etas[n - 1], es.norm_factors[n - 1]});
      };
    });
  }

  // ----------------------------------------------------------------- kernel
  {
    auto* cmd = app.add_subcommand("kernel", "heat kernel matrix on a grid");
    auto bc = std::make_shared<BcFlags>();
    auto t = std::make_shared<double>(0.1);
    auto grid = std::make_shared<int>(33);
    auto modes = std::make_shared<int>(512);
    bc->attach(cmd);
    cmd->add_option("--t", *t, "time");
    cmd->add_option("--grid-size", *grid, "grid points per axis");
    cmd->add_option("--modes", *modes, "mode count");
    attach_common(cmd, common);
    cmd->callback([&, bc, t, grid, modes] {
      active = "kernel";
      config_echo = {{"bc", bc->bc}, {"t", *t}, {"grid_size", *grid}, {"modes", *modes}};
      action = [&, bc, t, grid, modes] {
        const EigenSystem es = build_eigensystem(bc->make(), *modes);
        const KernelEvaluator ke(es, 1e-10);
        fs::create_directories(common.dir());
        std::vector<std::string> hdr{"x_over_y"};
        std::vector<double> ys(static_cast<std::size_t>(*grid));
        for (int j = 0; j < *grid; ++j) {
          ys[static_cast<std::size_t>(j)] = es.bc.length * j / (*grid - 1);
          hdr.push_back(format_double(ys[static_cast<std::size_t>(j)]));
        }
        CsvWriter csv((common.dir() / "kernel.csv").string(), hdr);
        for (int i = 0; i < *grid; ++i) {
          const double x = es.bc.length * i / (*grid - 1);
          std::vector<double> row{x};
          for (int j = 0; j < *grid; ++j)
            row.push_back(ke.eval(*t, x, ys[static_cast<std::size_t>(j)]));
          csv.row(row);
        }
      };
    });
  }

  // -------------------------------------------------------- kernel-bound-fit
  {
    auto* cmd = app.add_subcommand("kernel-bound-fit",
                                   "fit C in G_t <= C min(1/sqrt(t), t/|x-y|^3)");
    auto bc = std::make_shared<BcFlags>();
    auto modes = std::make_shared<int>(512);
    bc->attach(cmd);
    cmd->add_option("--modes", *modes, "mode count");
    attach_common(cmd, common);
    cmd->callback([&, bc, modes] {
      active = "kernel-bound-fit";
      config_echo = {{"bc", bc->bc}, {"modes", *modes}};
      action = [&, bc, modes] {
        const EigenSystem es = build_eigensystem(bc->make(), *modes);
        const KernelEvaluator ke(es, 1e-10);
        const double L = es.bc.length;
        auto fit_on = [&](int nx) {
          double c = 0.0;
          for (double t : {0.004, 0.006, 0.01, 0.02, 0.03, 0.06, 0.1, 0.2, 0.3})
            for (int i = 1; i < nx; ++i)
              for (int j = 1; j < nx; ++j) {
                const double x = L * i / nx, y = L * j / nx;
                const double bound = std::min(
                    1.0 / std::sqrt(t), t / std::pow(std::abs(x - y) + 1e-300, 3));
                c = std::max(c, ke.eval(t, x, y) / bound);
              }
          return c;
        };
        const double coarse = fit_on(20);
        const double fine = fit_on(40);
        fs::create_directories(common.dir());
        write_summary(common, "kernel_bound.json",
                      {{"C_coarse", coarse},
                       {"C_fine", fine},
                       {"refinement_ratio", fine / coarse}});
      };
    });
  }

  // -------------------------------------------------------------------- cov
  {
    auto* cmd = app.add_subcommand("cov", "covariance oracle on point pairs from CSV");
    auto bc = std::make_shared<BcFlags>();
    auto modes = std::make_shared<int>(1024);
    auto points = std::make_shared<std::string>();
    bc->attach(cmd);
    cmd->add_option("--modes", *modes, "oracle mode count");
    cmd->add_option("--points", *points, "CSV rows t1,x1,t2,x2")->required();
    attach_common(cmd, common);
    cmd->callback([&, bc, modes, points] {
      active = "cov";
      config_echo = {{"bc", bc->bc}, {"modes", *modes}, {"points", *points}};
      action = [&, bc, modes, points] {
        const EigenSystem es = build_eigensystem(bc->make(), *modes);
        CovarianceOracle oracle(es, *modes);
        oracle.set_run_context(common.rc());
        std::ifstream in(*points);
        if (!in) throw std::invalid_argument("cannot open " + *points);
        fs::create_directories(common.dir());
        const std::vector<std::string> hdr{"t1", "x1", "t2", "x2", "cov", "var_increment"};
        CsvWriter csv((common.dir() / "cov.csv").string(), hdr);
        std::string line;
        while (std::getline(in, line)) {
          double t1, x1, t2, x2;
          if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t1, &x1, &t2, &x2) != 4)
            continue;
          const SpaceTimePoint a{t1, x1}, b{t2, x2};
          csv.row(std::vector<double>{t1, x1, t2, x2, oracle.cov(a, b),
                                      oracle.var_increment(a, b)});
        }
      };
    });
  }

  // --------------------------------------------------------------- sample-w
  {
    auto* cmd = app.add_subcommand("sample-w", "exact-in-law OU sampler of w");
    auto sim = std::make_shared<SimFlags>();
    auto dump = std::make_shared<std::string>();
    sim->attach(cmd);
    cmd->add_option("--dump", *dump, "binary path archive output");
    attach_common(cmd, common);
    cmd->callback([&, sim, dump] {
      active = "sample-w";
      config_echo = {{"bc", sim->bc.bc},     {"modes", sim->modes},
                     {"t_grid", sim->t_grid}, {"x_grid", sim->x_grid},
                     {"reps", sim->reps}};
      action = [&, sim, dump] {
        const PathArchive a = load_or_sample("", *sim, common);
        fs::create_directories(common.dir());
        const std::vector<std::string> hdr{"t", "x", "mean", "variance"};
        CsvWriter csv((common.dir() / "sample_w_summary.csv").string(), hdr);
        const std::size_t nt = a.times.size(), nx = a.xs.size();
        for (std::size_t i = 0; i < nt; ++i)
          for (std::size_t j = 0; j < nx; ++j) {
            double s = 0, s2 = 0;
            for (std::int64_t rep = 0; rep < a.reps; ++rep) {
              const double v = a.rep(rep)[i * nx + j];
              s += v;
              s2 += v * v;
            }
            const double mean = s / a.reps;
            csv.row(std::vector<double>{a.times[i], a.xs[j], mean,
                                        s2 / a.reps - mean * mean});
          }
        if (!dump->empty()) a.save(*dump);
      };
    });
  }

  // -------------------------------------------------------------- slnd-scan
  {
    auto* cmd = app.add_subcommand("slnd-scan", "conditional-variance ratio scan");
    auto bc = std::make_shared<BcFlags>();
    auto modes = std::make_shared<int>(128);
    auto interior = std::make_shared<std::string>("0.1,1.0,0.2,0.8");
    auto trials = std::make_shared<int>(200);
    auto max_m = std::make_shared<int>(20);
    auto include_boundary = std::make_shared<bool>(false);
    auto denom = std::make_shared<std::string>("bc");
    bc->attach(cmd);
    cmd->add_option("--modes", *modes, "oracle mode count");
    cmd->add_option("--interior", *interior, "a,T,c,d rectangle");
    cmd->add_option("--trials", *trials, "scan trials");
    cmd->add_option("--max-m", *max_m, "max conditioning points");
    cmd->add_flag("--include-boundary", *include_boundary,
                  "allow Robin rectangles near the boundary (exploratory)");
    cmd->add_option("--denominator", *denom, "rho | bc");
    attach_common(cmd, common);
    cmd->callback([&, bc, modes, interior, trials, max_m, include_boundary, denom] {
      active = "slnd-scan";
      config_echo = {{"bc", bc->bc},       {"modes", *modes}, {"interior", *interior},
                     {"trials", *trials},  {"max_m", *max_m},
                     {"include_boundary", *include_boundary}, {"denominator", *denom}};
      action = [&, bc, modes, interior, trials, max_m, include_boundary, denom] {
        const EigenSystem es = build_eigensystem(bc->make(), *modes);
        CovarianceOracle oracle(es, *modes);
        oracle.set_run_context(common.rc());
        SlndScanConfig cfg;
        const std::vector<double> rect = parse_grid(*interior);
        if (rect.size() != 4) throw std::invalid_argument("--interior needs a,T,c,d");
        cfg.a = rect[0];
        cfg.T = rect[1];
        cfg.c = rect[2];
        cfg.d = rect[3];
        cfg.trials = *trials;
        cfg.max_m = *max_m;
        cfg.seed = common.seed;
        cfg.strict_interior = !*include_boundary;
        cfg.denominator = (*denom == "rho") ? SlndDenominator::RhoOnly
                                            : SlndDenominator::BcSpecific;
        const SlndScanReport rep = slnd_ratio_scan(oracle, cfg, common.rc());
        fs::create_directories(common.dir());
        const std::vector<std::string> hdr{"trial", "m", "min_rho2", "cond_var", "ratio"};
        CsvWriter csv((common.dir() / "slnd_scan.csv").string(), hdr);
        for (const auto& row : rep.rows)
          csv.row(std::vector<double>{static_cast<double>(row.trial),
                                      static_cast<double>(row.m), row.min_rho2,
                                      row.cond_var, row.ratio});
        write_summary(common, "slnd_scan_summary.json",
                      {{"min_ratio", rep.min_ratio}, {"max_ratio", rep.max_ratio}});
      };
    });
  }

  // ------------------------------------------------------------------ solve
  {
    auto* cmd = app.add_subcommand("solve", "coupled nonlinear/linear SPDE solver");
    auto bc = std::make_shared<BcFlags>();
    auto b_spec = std::make_shared<std::string>("zero");
    auto s_spec = std::make_shared<std::string>("one");
    auto u0_spec = std::make_shared<std::string>("zero");
    auto dt = std::make_shared<double>(1e-4);
    auto dx = std::make_shared<double>(1.0 / 256);
    auto modes = std::make_shared<int>(128);
    auto horizon = std::make_shared<double>(0.1);
    auto reps = std::make_shared<int>(1);
    auto dump = std::make_shared<std::string>();
    bc->attach(cmd);
    cmd->add_option("--b", *b_spec, "drift: zero|cos|table:file");
    cmd->add_option("--sigma", *s_spec, "diffusion: one|sin2|affine:a:b|table:file");
    cmd->add_option("--u0", *u0_spec, "initial data: zero|const:c|bump|table:file");
    cmd->add_option("--dt", *dt, "time step");
    cmd->add_option("--dx", *dx, "cell width (cells = L/dx)");
    cmd->add_option("--modes", *modes, "spectral modes");
    cmd->add_option("--horizon", *horizon, "final time (multiple of dt)");
    cmd->add_option("--reps", *reps, "replicates");
    cmd->add_option("--dump", *dump, "binary archive of u snapshots");
    attach_common(cmd, common);
    cmd->callback([&, bc, b_spec, s_spec, u0_spec, dt, dx, modes, horizon, reps, dump] {
      active = "solve";
      config_echo = {{"bc", bc->bc},      {"b", *b_spec},     {"sigma", *s_spec},
                     {"u0", *u0_spec},    {"dt", *dt},        {"dx", *dx},
                     {"modes", *modes},   {"horizon", *horizon}, {"reps", *reps}};
      action = [&, bc, b_spec, s_spec, u0_spec, dt, dx, modes, horizon, reps, dump] {
        const BoundaryCondition bcv = bc->make();
        const int cells = static_cast<int>(std::lround(bcv.length / *dx));
        const EigenSystem es = build_eigensystem(bcv, *modes);
        SchemeConfig cfg;
        cfg.es = &es;
        cfg.dt = *dt;
        cfg.cells = cells;
        cfg.modes = *modes;
        Coefficients co;
        co.b = parse_b(*b_spec);
        co.sigma = parse_sigma(*s_spec);
        const auto u0 = parse_u0(*u0_spec);
        const std::vector<double> u0c = expand_function(es, u0);

        // snapshot thinning: at most ~64 recorded times
        const std::int64_t n_steps = std::llround(*horizon / *dt);
        const std::int64_t every = std::max<std::int64_t>(1, n_steps / 64);
        RecordSpec rec;
        for (std::int64_t s = 0; s <= n_steps; s += every) rec.steps.push_back(s);
        rec.cell_begin = 0;
        rec.cell_end = cells;

        PathArchive au;
        au.reps = *reps;
        for (std::int64_t s : rec.steps) au.times.push_back(s * *dt);
        for (int j = 0; j < cells; ++j) au.xs.push_back((j + 0.5) * cfg.dx());
        const std::size_t stride = au.times.size() * au.xs.size();
        au.values.assign(static_cast<std::size_t>(*reps) * stride, 0.0);
        std::vector<double> final_mean(static_cast<std::size_t>(cells), 0.0);
        for_each_replicate(*reps, common.rc(), [&](std::int64_t rep) {
          const PathWindow w = solve_coupled_window(cfg, co, u0c, n_steps * *dt, rec,
                                                    common.seed,
                                                    static_cast<std::uint64_t>(rep), u0);
          std::copy(w.u.begin(), w.u.end(),
                    au.values.begin() + static_cast<std::size_t>(rep) * stride);
        });
        for (std::int64_t rep = 0; rep < *reps; ++rep)
          for (int j = 0; j < cells; ++j)
            final_mean[static_cast<std::size_t>(j)] +=
                au.rep(rep)[(au.times.size() - 1) * au.xs.size() +
                            static_cast<std::size_t>(j)] /
                *reps;
        fs::create_directories(common.dir());
        const std::vector<std::string> hdr{"x", "mean_u_final"};
        CsvWriter csv((common.dir() / "solve_final.csv").string(), hdr);
        for (int j = 0; j < cells; ++j)
          csv.row(std::vector<double>{au.xs[static_cast<std::size_t>(j)],
                                      final_mean[static_cast<std::size_t>(j)]});
        if (!dump->empty()) au.save(*dump);
      };
    });
  }

  // -------------------------------------------------------------------- kpz
  {
    auto* cmd = app.add_subcommand("kpz", "Hopf-Cole open KPZ runs");
    auto mu = std::make_shared<double>(0.5);
    auto nu = std::make_shared<double>(0.5);
    auto u0_spec = std::make_shared<std::string>("const:1");
    auto dt = std::make_shared<double>(1e-4);
    auto dx = std::make_shared<double>(1.0 / 256);
    auto modes = std::make_shared<int>(128);
    auto horizon = std::make_shared<double>(0.1);
    auto reps = std::make_shared<int>(100);
    cmd->add_option("--mu", *mu, "left boundary slope");
    cmd->add_option("--nu", *nu, "right boundary slope");
    cmd->add_option("--u0", *u0_spec, "strictly positive: const:c|table:file");
    cmd->add_option("--dt", *dt, "time step");
    cmd->add_option("--dx", *dx, "cell width");
    cmd->add_option("--modes", *modes, "spectral modes");
    cmd->add_option("--horizon", *horizon, "final time");
    cmd->add_option("--reps", *reps, "replicates");
    attach_common(cmd, common);
    cmd->callback([&, mu, nu, u0_spec, dt, dx, modes, horizon, reps] {
      active = "kpz";
      config_echo = {{"mu", *mu},       {"nu", *nu},     {"u0", *u0_spec},
                     {"dt", *dt},       {"dx", *dx},     {"modes", *modes},
                     {"horizon", *horizon}, {"reps", *reps}};
      action = [&, mu, nu, u0_spec, dt, dx, modes, horizon, reps] {
        const EigenSystem es = build_eigensystem(robin_from_kpz(*mu, *nu), *modes);
        KPZConfig cfg;
        cfg.mu = *mu;
        cfg.nu = *nu;
        cfg.scheme.es = &es;
        cfg.scheme.dt = *dt;
        cfg.scheme.cells = static_cast<int>(std::lround(1.0 / *dx));
        cfg.scheme.modes = *modes;
        cfg.u0 = parse_u0(*u0_spec);
        cfg.validate();
        const std::int64_t n_steps = std::llround(*horizon / *dt);
        RecordSpec rec;
        rec.steps = {n_steps};
        rec.cell_begin = 0;
        rec.cell_end = cfg.scheme.cells;
        std::vector<int> excl(static_cast<std::size_t>(*reps), 0);
        std::vector<double> h_mean(static_cast<std::size_t>(cfg.scheme.cells), 0.0);
        std::vector<double> w_mean(h_mean);
        std::int64_t included = 0;
        std::vector<std::vector<double>> h_rows(static_cast<std::size_t>(*reps));
        std::vector<std::vector<double>> w_rows(static_cast<std::size_t>(*reps));
        for_each_replicate(*reps, common.rc(), [&](std::int64_t rep) {
          const KpzPathWindow p = solve_kpz_window(cfg, n_steps * *dt, rec, common.seed,
                                                   static_cast<std::uint64_t>(rep));
          if (p.excluded) {
            excl[static_cast<std::size_t>(rep)] = 1;
            return;
          }
          h_rows[static_cast<std::size_t>(rep)] = p.win.u;
          w_rows[static_cast<std::size_t>(rep)] = p.win.w;
        });
        int n_excl = 0;
        for (std::size_t rep = 0; rep < h_rows.size(); ++rep) {
          if (excl[rep]) {
            ++n_excl;
            continue;
          }
          ++included;
          for (std::size_t j = 0; j < h_mean.size(); ++j) {
            h_mean[j] += h_rows[rep][j];
            w_mean[j] += w_rows[rep][j];
          }
        }
        const double frac = static_cast<double>(n_excl) / *reps;
        KpzRunReport report;
        report.reps = *reps;
        report.excluded = n_excl;
        fs::create_directories(common.dir());
        const std::vector<std::string> hdr{"x", "mean_h_final", "mean_w_final"};
        CsvWriter csv((common.dir() / "kpz_final.csv").string(), hdr);
        for (std::size_t j = 0; j < h_mean.size(); ++j)
          csv.row(std::vector<double>{(j + 0.5) / cfg.scheme.cells,
                                      included ? h_mean[j] / included : 0.0,
                                      included ? w_mean[j] / included : 0.0});
        write_summary(common, "kpz_summary.json",
                      {{"exclusion_fraction", frac}, {"reps", *reps}});
        if (report.failed())
          throw std::runtime_error(
              "kpz: positivity exclusion fraction " + format_double(frac) +
              " exceeds 20% (step size too coarse for positivity)");
      };
    });
  }

  // ----------------------------------------------- statistics over archives
  auto add_stat_command = [&](const std::string& name, const std::string& help,
                              auto body_factory) {
    auto* cmd = app.add_subcommand(name, help);
    auto sim = std::make_shared<SimFlags>();
    auto paths = std::make_shared<std::string>();
    sim->attach(cmd);
    cmd->add_option("--paths", *paths, "path archive (skips simulation)");
    attach_common(cmd, common);
    auto body = body_factory(cmd);
    cmd->callback([&, sim, paths, body, name] {
      active = name;
      config_echo = {{"paths", *paths}, {"bc", sim->bc.bc}, {"reps", sim->reps}};
      action = [&, sim, paths, body] {
        const PathArchive a = load_or_sample(*paths, *sim, common);
        fs::create_directories(common.dir());
        body(a);
      };
    });
  };

  add_stat_command("modulus", "local/uniform modulus statistics", [&](CLI::App* cmd) {
    auto center = std::make_shared<std::string>("0.25,0.5");
    auto eps0 = std::make_shared<double>(0.3);
    auto rungs = std::make_shared<int>(4);
    auto uniform = std::make_shared<bool>(false);
    auto norm = std::make_shared<std::string>("loglog");
    cmd->add_option("--center", *center, "t,x base point");
    cmd->add_option("--eps0", *eps0, "largest ladder rung");
    cmd->add_option("--rungs", *rungs, "dyadic rungs");
    cmd->add_flag("--uniform", *uniform, "uniform (pair) statistic over the grid");
    cmd->add_option("--normalizer", *norm, "loglog|log");
    return std::function<void(const PathArchive&)>([&, center, eps0, rungs, uniform,
                                                    norm](const PathArchive& a) {
      std::vector<double> ladder;
      for (int k = 0; k < *rungs; ++k) ladder.push_back(*eps0 * std::pow(2.0, -k));
      const Normalizer kind = (*norm == "log") ? Normalizer::Log : Normalizer::LogLog;
      const std::vector<double> c = parse_grid(*center);
      const std::size_t i0 = nearest_index(a.times, c[0]);
      const std::size_t j0 = nearest_index(a.xs, c[1]);
      std::vector<std::vector<double>> per_path(static_cast<std::size_t>(a.reps));
      for_each_replicate(a.reps, common.rc(), [&](std::int64_t rep) {
        const GridView g{a.times, a.xs, a.rep(rep)};
        per_path[static_cast<std::size_t>(rep)] =
            *uniform ? uniform_modulus_path(g, ladder, kind)
                     : local_modulus_path(g, i0, j0, ladder, kind);
      });
      const ModulusStatistic st = aggregate_modulus(per_path, ladder, kind);
      const std::vector<std::string> hdr{"rep", "eps", "statistic"};
      CsvWriter csv((common.dir() / "modulus.csv").string(), hdr);
      for (std::size_t rep = 0; rep < st.per_path.size(); ++rep)
        for (std::size_t k = 0; k < ladder.size(); ++k)
          csv.row(std::vector<double>{static_cast<double>(rep), ladder[k],
                                      st.per_path[rep][k]});
      write_summary(common, "modulus_summary.json",
                    {{"ladder", st.ladder},
                     {"medians", st.medians},
                     {"normalizer", *norm},
                     {"uniform", *uniform}});
    });
  });

  add_stat_command("smallball", "small-ball probabilities and ratio fit",
                   [&](CLI::App* cmd) {
    auto center = std::make_shared<std::string>("0.25,0.5");
    auto radius = std::make_shared<double>(0.3);
    auto ratios = std::make_shared<std::string>("0.3,0.35,0.4,0.45,0.5");
    cmd->add_option("--center", *center, "t,x base point");
    cmd->add_option("--radius", *radius, "ball radius r");
    cmd->add_option("--ratios", *ratios, "r/eps rungs");
    return std::function<void(const PathArchive&)>([&, center, radius,
                                                    ratios](const PathArchive& a) {
      const std::vector<double> c = parse_grid(*center);
      const std::size_t i0 = nearest_index(a.times, c[0]);
      const std::size_t j0 = nearest_index(a.xs, c[1]);
      std::vector<double> sups(static_cast<std::size_t>(a.reps));
      for_each_replicate(a.reps, common.rc(), [&](std::int64_t rep) {
        const GridView g{a.times, a.xs, a.rep(rep)};
        sups[static_cast<std::size_t>(rep)] = ball_sup_path(g, i0, j0, *radius);
      });
      std::vector<double> qs = parse_grid(*ratios);
      std::vector<double> eps;
      for (double q : qs) eps.push_back(*radius / q);
      std::sort(eps.begin(), eps.end(), std::greater<double>());
      const SmallBallEstimate sb = small_ball_estimate(sups, *radius, eps);
      const std::vector<std::string> hdr{"eps", "ratio", "p_hat", "wilson_lo", "wilson_hi"};
      CsvWriter csv((common.dir() / "smallball.csv").string(), hdr);
      for (std::size_t k = 0; k < sb.eps.size(); ++k)
        csv.row(std::vector<double>{sb.eps[k], *radius / sb.eps[k], sb.p_hat[k],
                                    sb.intervals[k].lo, sb.intervals[k].hi});
      json excluded = json::array();
      for (std::size_t k : sb.excluded) excluded.push_back(k);
      write_summary(common, "smallball_summary.json",
                    {{"r", sb.r}, {"samples", sb.samples}, {"excluded_rungs", excluded}});
    });
  });

  add_stat_command("chung", "Chung running-min statistic", [&](CLI::App* cmd) {
    auto center = std::make_shared<std::string>("0.25,0.5");
    auto eps0 = std::make_shared<double>(0.3);
    auto rungs = std::make_shared<int>(4);
    cmd->add_option("--center", *center, "t,x base point");
    cmd->add_option("--eps0", *eps0, "largest rung");
    cmd->add_option("--rungs", *rungs, "dyadic rungs");
    return std::function<void(const PathArchive&)>([&, center, eps0,
                                                    rungs](const PathArchive& a) {
      std::vector<double> ladder;
      for (int k = 0; k < *rungs; ++k) ladder.push_back(*eps0 * std::pow(2.0, -k));
      const std::vector<double> c = parse_grid(*center);
      const std::size_t i0 = nearest_index(a.times, c[0]);
      const std::size_t j0 = nearest_index(a.xs, c[1]);
      std::vector<double> final_stat(static_cast<std::size_t>(a.reps));
      for_each_replicate(a.reps, common.rc(), [&](std::int64_t rep) {
        const GridView g{a.times, a.xs, a.rep(rep)};
        final_stat[static_cast<std::size_t>(rep)] = chung_path(g, i0, j0, ladder).back();
      });
      const std::vector<std::string> hdr{"rep", "chung_running_min"};
      CsvWriter csv((common.dir() / "chung.csv").string(), hdr);
      for (std::size_t rep = 0; rep < final_stat.size(); ++rep)
        csv.row(std::vector<double>{static_cast<double>(rep), final_stat[rep]});
      std::vector<double> copy(final_stat);
      const double med = median(copy);
      const double iqr = quantile(final_stat, 0.75) - quantile(final_stat, 0.25);
      write_summary(common, "chung_summary.json", {{"median", med}, {"iqr", iqr}});
    });
  });

  add_stat_command("scan", "exceptional-point fraction scan", [&](CLI::App* cmd) {
    auto eps = std::make_shared<double>(0.2);
    auto thetas = std::make_shared<std::string>("0,0.5,1,1.5,2,3");
    cmd->add_option("--eps", *eps, "local scale");
    cmd->add_option("--thetas", *thetas, "threshold grid");
    return std::function<void(const PathArchive&)>([&, eps,
                                                    thetas](const PathArchive& a) {
      const std::vector<double> th = parse_grid(*thetas);
      std::vector<std::vector<double>> fracs(static_cast<std::size_t>(a.reps));
      for_each_replicate(a.reps, common.rc(), [&](std::int64_t rep) {
        const GridView g{a.times, a.xs, a.rep(rep)};
        fracs[static_cast<std::size_t>(rep)] = exceptional_scan_path(g, *eps, th, {});
      });
      const std::vector<std::string> hdr{"theta", "mean_fraction"};
      CsvWriter csv((common.dir() / "scan.csv").string(), hdr);
      json summary = json::array();
      for (std::size_t q = 0; q < th.size(); ++q) {
        double m = 0;
        for (const auto& f : fracs) m += f[q];
        m /= static_cast<double>(fracs.size());
        csv.row(std::vector<double>{th[q], m});
        summary.push_back({{"theta", th[q]}, {"fraction", m}});
      }
      write_summary(common, "scan_summary.json", {{"fractions", summary}});
    });
  });

  add_stat_command("moments", "empirical k-norms at a point", [&](CLI::App* cmd) {
    auto point = std::make_shared<std::string>("0.25,0.5");
    auto ks = std::make_shared<std::string>("2,4,8");
    cmd->add_option("--point", *point, "t,x probe");
    cmd->add_option("--ks", *ks, "moment orders");
    return std::function<void(const PathArchive&)>([&, point, ks](const PathArchive& a) {
      const std::vector<double> c = parse_grid(*point);
      const std::size_t i0 = nearest_index(a.times, c[0]);
      const std::size_t j0 = nearest_index(a.xs, c[1]);
      std::vector<double> vals(static_cast<std::size_t>(a.reps));
      for (std::int64_t rep = 0; rep < a.reps; ++rep)
        vals[static_cast<std::size_t>(rep)] = a.rep(rep)[i0 * a.xs.size() + j0];
      const std::vector<double> kd = parse_grid(*ks);
      std::vector<int> ki;
      for (double k : kd) ki.push_back(static_cast<int>(k));
      const std::vector<double> norms = moment_norms(vals, ki);
      const std::vector<std::string> hdr{"k", "k_norm", "sqrt_k_ratio"};
      CsvWriter csv((common.dir() / "moments.csv").string(), hdr);
      for (std::size_t i = 0; i < ki.size(); ++i)
        csv.row(std::vector<double>{static_cast<double>(ki[i]), norms[i],
                                    norms[i] / std::sqrt(static_cast<double>(ki[i]))});
      write_summary(common, "moments_summary.json", {{"norms", norms}});
    });
  });

  // ------------------------------------------------------------- acceptance
  {
    auto* cmd = app.add_subcommand("acceptance", "run the acceptance suite");
    auto quick = std::make_shared<bool>(false);
    cmd->add_flag("--quick", *quick, "reduced replicate counts");
    attach_common(cmd, common);
    cmd->callback([&, quick] {
      active = "acceptance";
      config_echo = {{"quick", *quick}};
      action = [&, quick] {
        fs::create_directories(common.dir());
        AcceptanceOptions opt;
        opt.quick = *quick;
        opt.out_dir = common.out;
        opt.seed = common.seed;
        opt.threads = common.threads;
        opt.cli_path = *quick ? "" : cli_self_path();
        const std::vector<CriterionResult> results = run_acceptance(opt);
        json lines = json::array();
        for (const auto& r : results)
          lines.push_back({{"id", r.id},
                           {"name", r.name},
                           {"pass", r.pass},
                           {"informational", r.informational},
                           {"detail", r.detail}});
        write_summary(common, "acceptance_summary.json", {{"criteria", lines}});
        if (!all_passed(results)) throw std::runtime_error("acceptance criteria failed");
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    action();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    write_diagnostic(common, active, e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    write_diagnostic(common, active, e.what());
    return 2;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  write_manifest(common, active, config_echo, wall);
  return 0;
}
