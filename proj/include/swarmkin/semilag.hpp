#pragma once

// Spatial substep: exact transport along characteristics, df/dt = -v . grad_x f,
// with a limited cubic Bezier reconstruction on each grid cell.

#include <array>
#include <cstddef>
#include <span>

#include "swarmkin/core.hpp"

namespace swarmkin {

using Controls = std::array<double, 4>;

/// Bezier control values of the cubic through (f_{i-1}, f_i, f_{i+1}, f_{i+2})
/// restricted to [x_i, x_{i+1}].
Controls newton_to_bezier_1d(const Controls& stencil);

/// Same cubic, for a 4-point window whose cell [x_c, x_{c+1}] starts at
/// window position `offset` (0, 1 or 2). offset 1 is the centred case;
/// 0 and 2 are the one-sided windows used next to the boundaries.
Controls bezier_controls(const Controls& window, int offset);

/// Pulls the inner controls xi_1, xi_2 back into [min(lo, hi), max(lo, hi)].
Controls clamp_controls(Controls xi, double lo, double hi);

/// Cubic Bernstein evaluation, t in [0, 1].
double bernstein_eval(const Controls& xi, double t);

/// Interpolates samples at integer positions 0..n-1 (with stride) at fractional
/// position `pos` in [0, n-1]. The 4-point window is shifted inward at the
/// ends so it never leaves the axis.
double interpolate_line(const double* data, std::ptrdiff_t stride, int n, double pos,
                        bool limit = true);

/// Read-only view of a 2D array sampled on the (x, y) nodes.
struct PlaneView {
  const double* data = nullptr;
  int nx = 0;
  int ny = 0;
  std::ptrdiff_t stride_x = 0;
  std::ptrdiff_t stride_y = 1;

  double operator()(int i, int j) const { return data[i * stride_x + j * stride_y]; }
};

PlaneView plane_of(const DensityField& rho);
/// The fixed-velocity slice (k, l) of f.
PlaneView plane_of(const DistributionField& f, int k, int l);

/// Tensor-product limited interpolation: 1D passes along x on the four
/// stencil rows, then along y on the four results. Points outside the box
/// evaluate to 0.
double interpolate_2d(const PlaneView& plane, const Axis& x, const Axis& y, Vec2 point,
                      bool limit = true);

struct AdvectOptions {
  bool limit = true;        // clamp controls into the local hull
  bool repair_mass = true;  // global rescale back to the pre-step mass
};

/// One exact-characteristics step of length tau: f(x, v) <- f(x - v tau, v).
/// Feet outside the spatial box read 0. Updates f in place.
void advect_step(DistributionField& f, double tau, const AdvectOptions& opts = {});

}  // namespace swarmkin
