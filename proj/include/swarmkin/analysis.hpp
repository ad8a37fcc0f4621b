#pragma once

// Reference solutions and diagnostics: homogeneous equilibrium, the
// large-noise fixed point, the mill-distance functional, L2 errors across
// grids, radial profiles, probe slices and convergence-order fits.

#include <span>
#include <vector>

#include "swarmkin/core.hpp"

namespace swarmkin {

/// A field over the (u, w) cells of a grid; index k * n_w + l.
struct VelocityField {
  Axis u, w;
  std::vector<double> values;

  double at(int k, int l) const { return values[std::size_t(k) * w.n + l]; }
  double mass() const;
};

/// f_eq(v) = C exp(-(b |v|^4 / 4 - a |v|^2 / 2)), a = 2 alpha/A^2 - 1,
/// b = 2 beta/A^2, normalised to unit discrete mass on the velocity cells.
/// Throws SolverError for A = 0.
VelocityField homogeneous_equilibrium(const ModelParams& p, const PhaseGrid& grid);
/// Radius of the maximum of f_eq, sqrt(a/b) (0 when a <= 0).
double equilibrium_peak_speed(const ModelParams& p);

struct FixedPointOptions {
  double tol = 1e-10;
  int max_iter = 5000;
  double omega = 0.5;
};

struct FixedPointResult {
  DensityField rho;
  int iterations = 0;
  std::vector<double> residuals;  // L1 change per iteration
};

/// Damped Picard iteration for rho = exp(-U*rho - phi) / norm with unit mass.
FixedPointResult large_a_density(const Axis& x, const Axis& y, const ModelParams& p,
                                 const FixedPointOptions& opts = {});
/// normalize(exp(-U*rho - phi)).
DensityField fixed_point_map(const DensityField& rho, const ModelParams& p);

struct MillDistanceOptions {
  double eps_supp = 1e-3;
  /// Divide the per-node integral by rho (conditional velocity law).
  bool normalized = false;
};

/// max over supp rho of sum_v |v - sqrt(alpha/beta) x_perp/|x||^2 f(x, v) h_u h_w.
/// Nodes closer to the origin than one spatial spacing are skipped.
double mill_distance(const DistributionField& f, const ModelParams& p,
                     const MillDistanceOptions& opts = {});

/// Midpoint-rule L2 distance on the grid of rho_ref, after interpolating rho
/// onto it with the limited cubic Bezier reconstruction.
double l2_density_error(const DensityField& rho, const DensityField& rho_ref);

/// Resamples rho onto the nodes of (x, y) with the limited reconstruction.
DensityField interpolate_density(const DensityField& rho, const Axis& x, const Axis& y);

struct RadialProfile {
  std::vector<double> r;      // bin centres
  std::vector<double> mean;   // mean node density per bin
  std::vector<int> count;     // nodes per bin
};

/// Equal-width bins on [0, r_max]; r_max <= 0 means the farthest node.
RadialProfile radial_profile(const DensityField& rho, int n_bins, double r_max = 0.0);

struct ProbeSlice {
  int i = 0, j = 0;
  Vec2 x;
  VelocityField slice;
};

ProbeSlice velocity_marginal_at(const DistributionField& f, int i, int j);
std::vector<ProbeSlice> velocity_marginals_at(const DistributionField& f,
                                              std::span<const std::pair<int, int>> probes);
/// Nodes nearest to (+-radius, 0) and (0, +-radius).
std::vector<std::pair<int, int>> default_probes(const PhaseGrid& grid, double radius = 20.0);

/// Least-squares slope of log(err) against log(h).
double fit_order(std::span<const double> h, std::span<const double> err);

}  // namespace swarmkin
