#pragma once

#include <vector>

#include "swarmkin/core.hpp"

namespace swarmkin {

/// Morse potential U(r) = -C_a exp(-r/l_a) + C_r exp(-r/l_r).
double morse(double r, const ModelParams& p);
/// U'(r).
double morse_derivative(double r, const ModelParams& p);
/// grad U(d) = U'(|d|) d/|d|; zero at d = 0.
Vec2 morse_grad(Vec2 d, const ModelParams& p);

/// A quantity tabulated on every signed grid offset (p, q), |p| < n_x, |q| < n_y.
/// Translation invariance of the interaction lets one table serve all node pairs.
template <class T>
struct OffsetTable {
  int nx = 0;
  int ny = 0;
  std::vector<T> values;  // ((p + nx - 1) * (2 ny - 1) + q + ny - 1)

  OffsetTable() = default;
  OffsetTable(int nx_, int ny_)
      : nx(nx_), ny(ny_), values(std::size_t(2 * nx_ - 1) * (2 * ny_ - 1)) {}

  int width() const { return 2 * nx - 1; }
  int height() const { return 2 * ny - 1; }
  T& at(int p, int q) { return values[std::size_t(p + nx - 1) * (2 * ny - 1) + (q + ny - 1)]; }
  const T& at(int p, int q) const {
    return values[std::size_t(p + nx - 1) * (2 * ny - 1) + (q + ny - 1)];
  }
};

/// grad U at displacement (p h_x, q h_y).
using KernelTable = OffsetTable<Vec2>;
/// U at displacement (p h_x, q h_y); used by the large-noise fixed point.
using PotentialTable = OffsetTable<double>;

KernelTable kernel_table(const PhaseGrid& grid, const ModelParams& p);
PotentialTable potential_table(const Axis& x, const Axis& y, const ModelParams& p);

/// g(x_ij) = sum_kl K(i-k, j-l) rho_kl h_x h_y.
ForceField convolve_grad_u(const DensityField& rho, const KernelTable& kernel);
/// (U * rho)(x_ij) with the same midpoint rule.
DensityField convolve_u(const DensityField& rho, const PotentialTable& table);

/// grad phi for the quartic roosting potential; zero when roosting is absent.
Vec2 roosting_grad(Vec2 x, const ModelParams& p);
double roosting_potential(Vec2 x, const ModelParams& p);

}  // namespace swarmkin
