#include "swarmkin/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "swarmkin/potentials.hpp"
#include "swarmkin/semilag.hpp"

namespace swarmkin {

double VelocityField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * u.spacing() * w.spacing();
}

VelocityField homogeneous_equilibrium(const ModelParams& p, const PhaseGrid& grid) {
  if (p.noise_a == 0.0)
    throw SolverError("homogeneous_equilibrium: A = 0 has no smooth equilibrium");
  const double a2 = p.noise_a * p.noise_a;
  const double at = 2.0 * p.alpha / a2 - 1.0;
  const double bt = 2.0 * p.beta / a2;
  VelocityField f{grid.u, grid.w, std::vector<double>(grid.velocity_size())};
  // The exponent is shifted by its maximum over the grid before exp().
  std::vector<double> e(f.values.size());
  double emax = -INFINITY;
  for (int k = 0; k < grid.nu(); ++k)
    for (int l = 0; l < grid.nw(); ++l) {
      const double s = grid.velocity(k, l).norm2();
      const double v = -(bt * s * s / 4.0 - at * s / 2.0);
      e[k * grid.nw() + l] = v;
      emax = std::max(emax, v);
    }
  for (std::size_t i = 0; i < e.size(); ++i) f.values[i] = std::exp(e[i] - emax);
  const double m = f.mass();
  for (double& v : f.values) v /= m;
  return f;
}

double equilibrium_peak_speed(const ModelParams& p) {
  const double a2 = p.noise_a * p.noise_a;
  const double at = 2.0 * p.alpha / a2 - 1.0;
  const double bt = 2.0 * p.beta / a2;
  return at > 0.0 ? std::sqrt(at / bt) : 0.0;
}

DensityField fixed_point_map(const DensityField& rho, const ModelParams& p) {
  const PotentialTable table = potential_table(rho.x, rho.y, p);
  const DensityField conv = convolve_u(rho, table);
  DensityField out(rho.x, rho.y);
  double emax = -INFINITY;
  for (int i = 0; i < rho.x.n; ++i)
    for (int j = 0; j < rho.y.n; ++j) {
      const Vec2 x{rho.x.point(i), rho.y.point(j)};
      const double e = -conv.at(i, j) - roosting_potential(x, p);
      out.at(i, j) = e;
      emax = std::max(emax, e);
    }
  for (double& v : out.values) v = std::exp(v - emax);
  const double m = out.mass();
  for (double& v : out.values) v /= m;
  return out;
}

FixedPointResult large_a_density(const Axis& x, const Axis& y, const ModelParams& p,
                                 const FixedPointOptions& opts) {
  FixedPointResult res;
  res.rho = DensityField(x, y);
  const double uniform = 1.0 / (x.quadrature_span() * y.quadrature_span());
  std::fill(res.rho.values.begin(), res.rho.values.end(), uniform);

  const PotentialTable table = potential_table(x, y, p);
  std::vector<double> phi(res.rho.values.size());
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < y.n; ++j) phi[i * y.n + j] = roosting_potential({x.point(i), y.point(j)}, p);

  const double area = res.rho.cell_area();
  for (int it = 1; it <= opts.max_iter; ++it) {
    const DensityField conv = convolve_u(res.rho, table);
    std::vector<double> mapped(conv.values.size());
    double emax = -INFINITY;
    for (std::size_t n = 0; n < mapped.size(); ++n) {
      mapped[n] = -conv.values[n] - phi[n];
      emax = std::max(emax, mapped[n]);
    }
    double mass = 0.0;
    for (double& v : mapped) {
      v = std::exp(v - emax);
      mass += v;
    }
    mass *= area;
    double residual = 0.0;
    for (std::size_t n = 0; n < mapped.size(); ++n) {
      mapped[n] /= mass;
      residual += std::abs(mapped[n] - res.rho.values[n]);
    }
    residual *= area;
    res.residuals.push_back(residual);
    res.iterations = it;
    if (residual < opts.tol) return res;
    for (std::size_t n = 0; n < mapped.size(); ++n)
      res.rho.values[n] = (1.0 - opts.omega) * res.rho.values[n] + opts.omega * mapped[n];
  }
  throw SolverError("large_a_density: no convergence after " + std::to_string(opts.max_iter) +
                    " iterations, residual " + std::to_string(res.residuals.back()));
}

double mill_distance(const DistributionField& f, const ModelParams& p,
                     const MillDistanceOptions& opts) {
  const auto& g = f.grid;
  const DensityField rho = marginal_density(f);
  const double rho_max = *std::max_element(rho.values.begin(), rho.values.end());
  if (!(rho_max > 0.0)) throw SolverError("mill_distance: empty support");
  const double threshold = opts.eps_supp * rho_max;
  const double min_radius = std::min(g.hx(), g.hy());
  const double c = p.cruise_speed();
  const double dv = g.velocity_cell_volume();

  double best = -1.0;
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double r = rho.at(i, j);
      if (r < threshold || r <= 0.0) continue;
      const Vec2 x = g.position(i, j);
      const double rx = x.norm();
      if (rx < min_radius) continue;
      const Vec2 mill = x.perp() * (c / rx);
      const auto s = f.slice(i, j);
      double acc = 0.0;
      for (int k = 0; k < g.nu(); ++k)
        for (int l = 0; l < g.nw(); ++l)
          acc += (g.velocity(k, l) - mill).norm2() * s[k * g.nw() + l];
      acc *= dv;
      if (opts.normalized) acc /= r;
      best = std::max(best, acc);
    }
  if (best < 0.0) throw SolverError("mill_distance: empty support");
  return best;
}

namespace {

bool same_box(const Axis& a, const Axis& b) {
  const double tol = 1e-12 * std::max({1.0, std::abs(a.lo), std::abs(a.hi)});
  return std::abs(a.lo - b.lo) <= tol && std::abs(a.hi - b.hi) <= tol;
}

}  // namespace

DensityField interpolate_density(const DensityField& rho, const Axis& x, const Axis& y) {
  DensityField out(x, y);
  const PlaneView plane = plane_of(rho);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < y.n; ++j) {
      // Clamp into the box so that end nodes off by rounding still read data.
      const Vec2 pt{std::clamp(x.point(i), rho.x.lo, rho.x.hi),
                    std::clamp(y.point(j), rho.y.lo, rho.y.hi)};
      out.at(i, j) = interpolate_2d(plane, rho.x, rho.y, pt);
    }
  return out;
}

double l2_density_error(const DensityField& rho, const DensityField& rho_ref) {
  if (!same_box(rho.x, rho_ref.x) || !same_box(rho.y, rho_ref.y))
    throw SolverError("l2_density_error: fields cover different boxes");
  double s = 0.0;
  if (rho.x == rho_ref.x && rho.y == rho_ref.y) {
    for (std::size_t n = 0; n < rho.values.size(); ++n) {
      const double d = rho.values[n] - rho_ref.values[n];
      s += d * d;
    }
  } else {
    const DensityField on_ref = interpolate_density(rho, rho_ref.x, rho_ref.y);
    for (std::size_t n = 0; n < on_ref.values.size(); ++n) {
      const double d = on_ref.values[n] - rho_ref.values[n];
      s += d * d;
    }
  }
  return std::sqrt(s * rho_ref.cell_area());
}

RadialProfile radial_profile(const DensityField& rho, int n_bins, double r_max) {
  if (n_bins < 2) throw SolverError("radial_profile: need at least 2 bins");
  if (r_max <= 0.0)
    r_max = std::hypot(std::max(std::abs(rho.x.lo), std::abs(rho.x.hi)),
                       std::max(std::abs(rho.y.lo), std::abs(rho.y.hi)));
  const double width = r_max / n_bins;
  RadialProfile prof;
  prof.r.resize(n_bins);
  prof.mean.assign(n_bins, 0.0);
  prof.count.assign(n_bins, 0);
  for (int b = 0; b < n_bins; ++b) prof.r[b] = (b + 0.5) * width;
  for (int i = 0; i < rho.x.n; ++i)
    for (int j = 0; j < rho.y.n; ++j) {
      const double r = std::hypot(rho.x.point(i), rho.y.point(j));
      if (r > r_max) continue;
      const int b = std::min(static_cast<int>(r / width), n_bins - 1);
      prof.mean[b] += rho.at(i, j);
      prof.count[b] += 1;
    }
  for (int b = 0; b < n_bins; ++b)
    if (prof.count[b] > 0) prof.mean[b] /= prof.count[b];
  return prof;
}

ProbeSlice velocity_marginal_at(const DistributionField& f, int i, int j) {
  const auto& g = f.grid;
  if (i < 0 || i >= g.nx() || j < 0 || j >= g.ny())
    throw SolverError("velocity_marginal_at: probe (" + std::to_string(i) + ", " +
                      std::to_string(j) + ") is outside the grid");
  const auto s = f.slice(i, j);
  return {i, j, g.position(i, j), VelocityField{g.u, g.w, {s.begin(), s.end()}}};
}

std::vector<ProbeSlice> velocity_marginals_at(const DistributionField& f,
                                              std::span<const std::pair<int, int>> probes) {
  std::vector<ProbeSlice> out;
  for (auto [i, j] : probes) out.push_back(velocity_marginal_at(f, i, j));
  return out;
}

std::vector<std::pair<int, int>> default_probes(const PhaseGrid& grid, double radius) {
  auto node = [](const Axis& a, double x) {
    return std::clamp(static_cast<int>(std::lround((x - a.lo) / a.spacing())), 0, a.n - 1);
  };
  return {{node(grid.x, radius), node(grid.y, 0.0)},
          {node(grid.x, 0.0), node(grid.y, radius)},
          {node(grid.x, -radius), node(grid.y, 0.0)},
          {node(grid.x, 0.0), node(grid.y, -radius)}};
}

double fit_order(std::span<const double> h, std::span<const double> err) {
  if (h.size() != err.size() || h.size() < 2)
    throw SolverError("fit_order: need at least two (h, err) pairs");
  double sx = 0.0, sy = 0.0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(err[i] > 0.0))
      throw SolverError("fit_order: entries must be positive");
    sx += std::log(h[i]);
    sy += std::log(err[i]);
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double dx = std::log(h[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err[i]) - my);
  }
  if (sxx == 0.0) throw SolverError("fit_order: all h are equal");
  return sxy / sxx;
}

}  // namespace swarmkin
