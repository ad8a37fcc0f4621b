#include "swarmkin/semilag.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace swarmkin {

namespace {

// d/dt of the cubic through window points 0..3, evaluated at point m.
constexpr double kDeriv[4][4] = {
    {-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0},
    {-1.0 / 3.0, -0.5, 1.0, -1.0 / 6.0},
    {1.0 / 6.0, -1.0, 0.5, 1.0 / 3.0},
    {-1.0 / 3.0, 1.5, -3.0, 11.0 / 6.0},
};

inline double deriv_at(int m, const double* f) {
  const double* d = kDeriv[m];
  return d[0] * f[0] + d[1] * f[1] + d[2] * f[2] + d[3] * f[3];
}

inline double segment_value(const double* f, int offset, double t, bool limit) {
  const double f0 = f[offset];
  const double f1 = f[offset + 1];
  double x1 = f0 + deriv_at(offset, f) / 3.0;
  double x2 = f1 - deriv_at(offset + 1, f) / 3.0;
  if (limit) {
    const double lo = std::min(f0, f1), hi = std::max(f0, f1);
    x1 = std::clamp(x1, lo, hi);
    x2 = std::clamp(x2, lo, hi);
  }
  const double s = 1.0 - t;
  return s * s * s * f0 + 3.0 * t * s * s * x1 + 3.0 * t * t * s * x2 + t * t * t * f1;
}

// Cell and window for a position in [0, n-1].
struct Window {
  int start;
  int offset;
  double t;
};

inline Window locate(int n, double pos) {
  int c = static_cast<int>(std::floor(pos));
  c = std::clamp(c, 0, n - 2);
  const int start = std::clamp(c - 1, 0, n - 4);
  return {start, c - start, pos - c};
}

}  // namespace

Controls newton_to_bezier_1d(const Controls& stencil) { return bezier_controls(stencil, 1); }

Controls bezier_controls(const Controls& w, int offset) {
  if (offset < 0 || offset > 2) throw SolverError("bezier_controls: offset must be 0, 1 or 2");
  return {w[offset], w[offset] + deriv_at(offset, w.data()) / 3.0,
          w[offset + 1] - deriv_at(offset + 1, w.data()) / 3.0, w[offset + 1]};
}

Controls clamp_controls(Controls xi, double lo, double hi) {
  const double a = std::min(lo, hi), b = std::max(lo, hi);
  xi[1] = std::clamp(xi[1], a, b);
  xi[2] = std::clamp(xi[2], a, b);
  return xi;
}

double bernstein_eval(const Controls& xi, double t) {
  const double s = 1.0 - t;
  return s * s * s * xi[0] + 3.0 * t * s * s * xi[1] + 3.0 * t * t * s * xi[2] +
         t * t * t * xi[3];
}

double interpolate_line(const double* data, std::ptrdiff_t stride, int n, double pos,
                        bool limit) {
  const Window win = locate(n, pos);
  const double f[4] = {data[win.start * stride], data[(win.start + 1) * stride],
                       data[(win.start + 2) * stride], data[(win.start + 3) * stride]};
  return segment_value(f, win.offset, win.t, limit);
}

PlaneView plane_of(const DensityField& rho) {
  return {rho.values.data(), rho.x.n, rho.y.n, rho.y.n, 1};
}

PlaneView plane_of(const DistributionField& f, int k, int l) {
  const auto& g = f.grid;
  const auto nv = static_cast<std::ptrdiff_t>(g.velocity_size());
  return {f.values.data() + g.velocity_index(k, l), g.nx(), g.ny(), nv * g.ny(), nv};
}

double interpolate_2d(const PlaneView& plane, const Axis& x, const Axis& y, Vec2 point,
                      bool limit) {
  const double px = (point.x - x.lo) / x.spacing();
  const double py = (point.y - y.lo) / y.spacing();
  if (!(px >= 0.0 && px <= x.n - 1) || !(py >= 0.0 && py <= y.n - 1)) return 0.0;
  const Window wy = locate(plane.ny, py);
  double col[4];
  for (int r = 0; r < 4; ++r)
    col[r] = interpolate_line(plane.data + (wy.start + r) * plane.stride_y, plane.stride_x,
                              plane.nx, px, limit);
  return segment_value(col, wy.offset, wy.t, limit);
}

void advect_step(DistributionField& f, double tau, const AdvectOptions& opts) {
  const auto& g = f.grid;
  const int nx = g.nx(), ny = g.ny(), nu = g.nu(), nw = g.nw();
  const auto nv = static_cast<std::ptrdiff_t>(g.velocity_size());
  const double mass_before = opts.repair_mass ? total_mass(f) : 0.0;

#pragma omp parallel
  {
    std::vector<double> plane(std::size_t(nx) * ny), tmp(plane.size());
#pragma omp for schedule(dynamic)
    for (int kl = 0; kl < nu * nw; ++kl) {
      const int k = kl / nw, l = kl % nw;
      const Vec2 v = g.velocity(k, l);
      double* base = f.values.data() + kl;

      bool empty = true;
      for (std::ptrdiff_t ij = 0; ij < nx * ny; ++ij) {
        plane[ij] = base[ij * nv];
        empty = empty && plane[ij] == 0.0;
      }
      if (empty) continue;

      // Foot of node i sits at index position i + sx; same for y.
      const double sx = -v.x * tau / g.hx();
      const double sy = -v.y * tau / g.hy();

      // Pass along x: tmp(i, j) = row j interpolated at i + sx.
      for (int i = 0; i < nx; ++i) {
        const double pos = i + sx;
        const bool inside = pos >= 0.0 && pos <= nx - 1;
        for (int j = 0; j < ny; ++j)
          tmp[i * ny + j] =
              inside ? interpolate_line(plane.data() + j, ny, nx, pos, opts.limit) : 0.0;
      }
      // Pass along y on the intermediate rows.
      for (int i = 0; i < nx; ++i) {
        const double* column = tmp.data() + i * ny;
        for (int j = 0; j < ny; ++j) {
          const double pos = j + sy;
          const bool inside = pos >= 0.0 && pos <= ny - 1;
          base[(std::ptrdiff_t(i) * ny + j) * nv] =
              inside ? interpolate_line(column, 1, ny, pos, opts.limit) : 0.0;
        }
      }
    }
  }

  if (opts.repair_mass) {
    const double mass_after = total_mass(f);
    if (mass_after > 0.0 && mass_after != mass_before) {
      const double s = mass_before / mass_after;
      for (double& v : f.values) v *= s;
    }
  }
}

}  // namespace swarmkin
