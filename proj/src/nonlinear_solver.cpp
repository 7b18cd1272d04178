#include "spdelab/nonlinear_solver.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "spdelab/rng.hpp"

namespace spdelab {

void Coefficients::validate(std::uint64_t seed, double range) const {
  if (!b || !sigma) throw std::invalid_argument("Coefficients: b and sigma required");
  RngStream rng = RngStream::keyed(seed, 0xC0u);
  for (int i = 0; i < 1000; ++i) {
    const double x = range * (2.0 * rng.uniform() - 1.0);
    const double y = range * (2.0 * rng.uniform() - 1.0);
    const double dx = std::abs(x - y);
    if (std::abs(b(x) - b(y)) > b_lipschitz * dx * (1.0 + 1e-9) + 1e-12)
      throw std::invalid_argument(
          "Coefficients: b violates its declared Lipschitz constant near x=" +
          std::to_string(x));
    if (std::abs(sigma(x) - sigma(y)) > sigma_lipschitz * dx * (1.0 + 1e-9) + 1e-12)
      throw std::invalid_argument(
          "Coefficients: sigma violates its declared Lipschitz constant near x=" +
          std::to_string(x));
  }
}

Coefficients Coefficients::additive() {
  Coefficients c;
  c.b = [](double) { return 0.0; };
  c.sigma = [](double) { return 1.0; };
  c.b_lipschitz = 0.0;
  c.sigma_lipschitz = 0.0;
  c.b_bounded = true;
  c.sigma_bounded = true;
  return c;
}

void SchemeConfig::validate() const {
  if (!es) throw std::invalid_argument("SchemeConfig: eigen-system required");
  if (!(dt > 0.0)) throw std::invalid_argument("SchemeConfig: dt must be > 0");
  if (dt >= 1.0)
    throw std::invalid_argument("SchemeConfig: dt >= 1 is outside the validated regime");
  if (cells < 1) throw std::invalid_argument("SchemeConfig: cells must be >= 1");
  if (modes < 8)
    throw std::invalid_argument("SchemeConfig: fewer than 8 modes is outside the validated regime");
  if (modes > es->count)
    throw std::invalid_argument("SchemeConfig: modes exceed the built eigen-system");
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Engine {
  const SchemeConfig* cfg;
  MatrixXd basis;      // cells x (modes + bound states), f_n(x_j)
  VectorXd decay;      // e^{-lambda_n dt}
  VectorXd a_u, a_w;   // modal states
  VectorXd u_cells, w_cells, forcing_u, forcing_w;
  std::vector<double> xs;
  double noise_sd;     // sqrt(dt / dx)
  double dx;

  Engine(const SchemeConfig& c, std::span<const double> u0_coeffs,
         const std::function<double(double)>& u0_fn)
      : cfg(&c) {
    const EigenSystem& es = *c.es;
    dx = c.dx();
    noise_sd = std::sqrt(c.dt / dx);
    xs.resize(static_cast<std::size_t>(c.cells));
    for (int j = 0; j < c.cells; ++j) xs[static_cast<std::size_t>(j)] = (j + 0.5) * dx;

    std::vector<RobinBoundState> bound;
    if (c.include_robin_bound_states) bound = robin_bound_states(es.bc);
    const int nb = static_cast<int>(bound.size());
    const int total = c.modes + nb;

    basis.resize(c.cells, total);
    for (int n = 0; n < c.modes; ++n)
      for (int j = 0; j < c.cells; ++j)
        basis(j, n) = es.mode(n + 1, xs[static_cast<std::size_t>(j)]);
    for (int b = 0; b < nb; ++b)
      for (int j = 0; j < c.cells; ++j)
        basis(j, c.modes + b) =
            bound[static_cast<std::size_t>(b)].eval(xs[static_cast<std::size_t>(j)],
                                                    es.bc.alpha);
    decay.resize(total);
    for (int n = 0; n < c.modes; ++n)
      decay[n] = std::exp(-es.lambdas[static_cast<std::size_t>(n)] * c.dt);
    for (int b = 0; b < nb; ++b)
      decay[c.modes + b] = std::exp(-bound[static_cast<std::size_t>(b)].lambda * c.dt);

    a_u = VectorXd::Zero(total);
    for (int n = 0; n < c.modes && n < static_cast<int>(u0_coeffs.size()); ++n)
      a_u[n] = u0_coeffs[static_cast<std::size_t>(n)];
    if (u0_fn) {
      for (int b = 0; b < nb; ++b) {
        double acc = 0.0;
        const auto& q = es.quadrature;
        for (std::size_t i = 0; i < q.nodes.size(); ++i)
          acc += q.weights[i] * u0_fn(q.nodes[i]) *
                 bound[static_cast<std::size_t>(b)].eval(q.nodes[i], es.bc.alpha);
        a_u[c.modes + b] = acc;
      }
    }
    a_w = VectorXd::Zero(total);
    u_cells.resize(c.cells);
    w_cells.resize(c.cells);
    forcing_u.resize(c.cells);
    forcing_w.resize(c.cells);
  }

  // one exponential-Euler step from identical cell noise; returns min over
  // cells of u at the step start (left-point values)
  double step(const Coefficients& coeffs, RngStream& rng, double* noise_row) {
    u_cells.noalias() = basis * a_u;
    w_cells.noalias() = basis * a_w;
    const double dt = cfg->dt;
    double min_u = u_cells[0];
    for (int j = 0; j < cfg->cells; ++j) {
      const double xi = rng.normal();
      if (noise_row) noise_row[j] = xi;
      const double wj = noise_sd * xi;
      const double uj = u_cells[j];
      min_u = std::min(min_u, uj);
      forcing_u[j] = (coeffs.b(uj) * dt + coeffs.sigma(uj) * wj) * dx;
      forcing_w[j] = wj * dx;
    }
    a_u.noalias() += basis.transpose() * forcing_u;
    a_u.array() *= decay.array();
    a_w.noalias() += basis.transpose() * forcing_w;
    a_w.array() *= decay.array();
    if (!a_u.allFinite())
      throw std::runtime_error("solver: non-finite modal state (path aborted)");
    return min_u;
  }

  void synth(VectorXd& out_u, VectorXd& out_w) {
    out_u.noalias() = basis * a_u;
    out_w.noalias() = basis * a_w;
  }
};

std::int64_t step_count(const SchemeConfig& cfg, double horizon) {
  const double k = horizon / cfg.dt;
  const std::int64_t n = static_cast<std::int64_t>(std::llround(k));
  if (std::abs(k - static_cast<double>(n)) > 1e-6 || n < 0)
    throw std::invalid_argument("solver: horizon must be an integer multiple of dt");
  return n;
}

}  // namespace

CoupledPaths solve_coupled(const SchemeConfig& cfg, const Coefficients& coeffs,
                           std::span<const double> u0_coefficients,
                           double horizon, std::uint64_t seed,
                           std::uint64_t replicate,
                           const std::function<double(double)>& u0_fn) {
  cfg.validate();
  const std::int64_t n_steps = step_count(cfg, horizon);
  Engine eng(cfg, u0_coefficients, u0_fn);

  CoupledPaths out;
  out.es = cfg.es;
  out.seed = seed;
  out.replicate = replicate;
  out.u0_coefficients.assign(u0_coefficients.begin(), u0_coefficients.end());
  out.xs = eng.xs;
  out.times.resize(static_cast<std::size_t>(n_steps + 1));
  const std::size_t nx = out.xs.size();
  out.u.assign(static_cast<std::size_t>(n_steps + 1) * nx, 0.0);
  out.w.assign(static_cast<std::size_t>(n_steps + 1) * nx, 0.0);
  out.noise.assign(static_cast<std::size_t>(n_steps) * nx, 0.0);

  RngStream rng = RngStream::keyed(seed, 0x55u /* solver */, replicate);
  VectorXd snap_u(cfg.cells), snap_w(cfg.cells);
  eng.synth(snap_u, snap_w);
  for (std::size_t j = 0; j < nx; ++j) {
    out.u[j] = snap_u[static_cast<Eigen::Index>(j)];
    out.w[j] = snap_w[static_cast<Eigen::Index>(j)];
  }
  for (std::int64_t k = 0; k < n_steps; ++k) {
    try {
      eng.step(coeffs, rng, &out.noise[static_cast<std::size_t>(k) * nx]);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at step " + std::to_string(k));
    }
    out.times[static_cast<std::size_t>(k + 1)] = (k + 1) * cfg.dt;
    eng.synth(snap_u, snap_w);
    double* urow = &out.u[static_cast<std::size_t>(k + 1) * nx];
    double* wrow = &out.w[static_cast<std::size_t>(k + 1) * nx];
    for (std::size_t j = 0; j < nx; ++j) {
      urow[j] = snap_u[static_cast<Eigen::Index>(j)];
      wrow[j] = snap_w[static_cast<Eigen::Index>(j)];
    }
  }
  return out;
}

PathWindow solve_coupled_window(const SchemeConfig& cfg, const Coefficients& coeffs,
                                std::span<const double> u0_coefficients,
                                double horizon, const RecordSpec& record,
                                std::uint64_t seed, std::uint64_t replicate,
                                const std::function<double(double)>& u0_fn) {
  cfg.validate();
  if (record.cell_begin < 0 || record.cell_end > cfg.cells ||
      record.cell_begin > record.cell_end)
    throw std::invalid_argument("solve_coupled_window: bad cell range");
  const std::int64_t n_steps = step_count(cfg, horizon);
  for (std::int64_t s : record.steps)
    if (s < 0 || s > n_steps)
      throw std::invalid_argument("solve_coupled_window: recorded step out of range");

  Engine eng(cfg, u0_coefficients, u0_fn);
  RngStream rng = RngStream::keyed(seed, 0x55u, replicate);

  PathWindow win;
  win.replicate = replicate;
  const std::size_t nx = static_cast<std::size_t>(record.cell_end - record.cell_begin);
  win.xs.assign(eng.xs.begin() + record.cell_begin, eng.xs.begin() + record.cell_end);
  win.ts.reserve(record.steps.size());
  for (std::int64_t s : record.steps) win.ts.push_back(s * cfg.dt);
  win.u.assign(record.steps.size() * nx, 0.0);
  win.w.assign(record.steps.size() * nx, 0.0);
  win.probe_u.assign(record.probes.size(), 0.0);
  win.probe_w.assign(record.probes.size(), 0.0);

  VectorXd snap_u(cfg.cells), snap_w(cfg.cells);
  double min_u = std::numeric_limits<double>::infinity();
  std::size_t rec_idx = 0;

  auto capture = [&](std::int64_t step) {
    bool need = rec_idx < record.steps.size() && record.steps[rec_idx] == step;
    bool probe_hit = false;
    for (const auto& p : record.probes) probe_hit |= (p.first == step);
    if (!need && !probe_hit) return;
    eng.synth(snap_u, snap_w);
    for (Eigen::Index j = 0; j < cfg.cells; ++j)
      min_u = std::min(min_u, snap_u[j]);
    if (need) {
      double* urow = &win.u[rec_idx * nx];
      double* wrow = &win.w[rec_idx * nx];
      for (std::size_t j = 0; j < nx; ++j) {
        urow[j] = snap_u[static_cast<Eigen::Index>(record.cell_begin) +
                         static_cast<Eigen::Index>(j)];
        wrow[j] = snap_w[static_cast<Eigen::Index>(record.cell_begin) +
                         static_cast<Eigen::Index>(j)];
      }
      ++rec_idx;
    }
    for (std::size_t p = 0; p < record.probes.size(); ++p) {
      if (record.probes[p].first != step) continue;
      win.probe_u[p] = snap_u[record.probes[p].second];
      win.probe_w[p] = snap_w[record.probes[p].second];
    }
  };

  capture(0);
  for (std::int64_t k = 0; k < n_steps; ++k) {
    double step_min;
    try {
      step_min = eng.step(coeffs, rng, nullptr);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at step " + std::to_string(k));
    }
    min_u = std::min(min_u, step_min);
    capture(k + 1);
  }
  eng.synth(snap_u, snap_w);
  for (Eigen::Index j = 0; j < cfg.cells; ++j) min_u = std::min(min_u, snap_u[j]);
  win.min_u = min_u;
  return win;
}

double modal_flow(const EigenSystem& es, std::span<const double> u0_coefficients,
                  double t, double x) {
  double s = 0.0;
  for (std::size_t n = 0; n < u0_coefficients.size(); ++n)
    s += std::exp(-es.lambdas[n] * t) * u0_coefficients[n] *
         es.mode(static_cast<int>(n) + 1, x);
  return s;
}

double linearization_error(const CoupledPaths& paths, const Coefficients& coeffs,
                           std::size_t ti, std::size_t xi, std::size_t tj,
                           std::size_t xj) {
  const std::size_t nt = paths.times.size(), nx = paths.xs.size();
  if (ti >= nt || tj >= nt || xi >= nx || xj >= nx)
    throw std::out_of_range(
        "linearization_error: indices must address stored grid points "
        "(no off-grid interpolation)");
  const double u_z = paths.u_at(ti, xi), u_zp = paths.u_at(tj, xj);
  const double w_z = paths.w_at(ti, xi), w_zp = paths.w_at(tj, xj);
  const double flow_z =
      modal_flow(*paths.es, paths.u0_coefficients, paths.times[ti], paths.xs[xi]);
  const double flow_zp =
      modal_flow(*paths.es, paths.u0_coefficients, paths.times[tj], paths.xs[xj]);
  return (u_zp - u_z) - (flow_zp - flow_z) - coeffs.sigma(u_z) * (w_zp - w_z);
}

}  // namespace spdelab
