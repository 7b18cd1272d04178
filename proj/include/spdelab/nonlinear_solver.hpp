#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spdelab/gaussian_field.hpp"
#include "spdelab/spectral.hpp"

namespace spdelab {

// Drift and diffusion coefficients with user-declared regularity.
struct Coefficients {
  std::function<double(double)> b;
  std::function<double(double)> sigma;
  double b_lipschitz = 1.0;
  double sigma_lipschitz = 1.0;
  bool b_bounded = false;
  bool sigma_bounded = false;

  // spot-checks the declared Lipschitz constants on random pairs
  void validate(std::uint64_t seed = 17, double range = 10.0) const;

  static Coefficients additive();  // b = 0, sigma = 1
};

// Pseudo-spectral exponential-Euler discretization: collocation at cell
// centers x_j = (j + 1/2) dx, left-point (predictable) coefficient
// evaluation, integrating factor applied after adding the forcing:
//   u_j   = sum_n a_n f_n(x_j)
//   F_j   = b(u_j) dt + sigma(u_j) W_j,   W_j ~ N(0, dt/dx) iid per cell
//   a_n  <- e^{-lambda_n dt} (a_n + sum_j f_n(x_j) F_j dx)
struct SchemeConfig {
  const EigenSystem* es = nullptr;
  double dt = 1e-4;
  int cells = 256;
  int modes = 128;
  // Robin bound states (negative eigenvalues) complete the basis; without
  // them no strictly positive state is representable, so they default on.
  bool include_robin_bound_states = true;

  double dx() const { return es->bc.length / cells; }
  void validate() const;
};

// Full-storage result of a coupled solve: u (with b, sigma) and w (b = 0,
// sigma = 1, zero initial state) advanced from identical per-cell noise.
struct CoupledPaths {
  std::vector<double> times;  // 0, dt, ..., K dt
  std::vector<double> xs;     // cell centers
  std::vector<double> u;      // row-major times x cells
  std::vector<double> w;
  std::vector<double> noise;  // standard normals, row-major (steps) x cells
  std::vector<double> u0_coefficients;
  const EigenSystem* es = nullptr;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;

  std::size_t n_x() const { return xs.size(); }
  double u_at(std::size_t ti, std::size_t xi) const { return u[ti * n_x() + xi]; }
  double w_at(std::size_t ti, std::size_t xi) const { return w[ti * n_x() + xi]; }
};

// u0_coefficients address the eigen-system modes; u0_fn, when given, also
// seeds any Robin bound-state coefficients (projection by quadrature).
CoupledPaths solve_coupled(const SchemeConfig& cfg, const Coefficients& coeffs,
                           std::span<const double> u0_coefficients,
                           double horizon, std::uint64_t seed,
                           std::uint64_t replicate = 0,
                           const std::function<double(double)>& u0_fn = {});

// Streaming variant: records u and w only on a sparse window (selected steps
// x cell range) plus point probes, so Monte Carlo runs need not store paths.
struct RecordSpec {
  std::vector<std::int64_t> steps;  // sorted step indices to record (0 = t0)
  int cell_begin = 0;
  int cell_end = 0;  // half-open range
  std::vector<std::pair<std::int64_t, int>> probes;  // (step, cell)
};

struct PathWindow {
  std::vector<double> ts, xs;
  std::vector<double> u, w;          // row-major ts x xs
  std::vector<double> probe_u, probe_w;
  double min_u = 0.0;                // running min over all cells and steps
  std::uint64_t replicate = 0;

  double u_at(std::size_t i, std::size_t j) const { return u[i * xs.size() + j]; }
  double w_at(std::size_t i, std::size_t j) const { return w[i * xs.size() + j]; }
};

PathWindow solve_coupled_window(const SchemeConfig& cfg, const Coefficients& coeffs,
                                std::span<const double> u0_coefficients,
                                double horizon, const RecordSpec& record,
                                std::uint64_t seed, std::uint64_t replicate = 0,
                                const std::function<double(double)>& u0_fn = {});

// E(z; z') = u(z') - u(z) - [flow(z') - flow(z)] - sigma(u(z)) (w(z') - w(z)),
// exact arithmetic on stored grid values; off-grid points are rejected.
double linearization_error(const CoupledPaths& paths, const Coefficients& coeffs,
                           std::size_t ti, std::size_t xi, std::size_t tj,
                           std::size_t xj);

// deterministic flow (G_t * u0)(x) from modal coefficients
double modal_flow(const EigenSystem& es, std::span<const double> u0_coefficients,
                  double t, double x);

}  // namespace spdelab
