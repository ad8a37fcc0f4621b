#include "swarmkin/potentials.hpp"

namespace swarmkin {

double morse(double r, const ModelParams& p) {
  return -p.c_a * std::exp(-r / p.l_a) + p.c_r * std::exp(-r / p.l_r);
}

double morse_derivative(double r, const ModelParams& p) {
  return (p.c_a / p.l_a) * std::exp(-r / p.l_a) - (p.c_r / p.l_r) * std::exp(-r / p.l_r);
}

Vec2 morse_grad(Vec2 d, const ModelParams& p) {
  const double r = d.norm();
  if (r == 0.0) return {};
  const double s = morse_derivative(r, p) / r;
  return {s * d.x, s * d.y};
}

KernelTable kernel_table(const PhaseGrid& grid, const ModelParams& p) {
  const int nx = grid.nx(), ny = grid.ny();
  const double hx = grid.hx(), hy = grid.hy();
  KernelTable k(nx, ny);
  // Fill the half-plane p > 0 (and the p = 0, q > 0 ray) and mirror, so that
  // K(-d) = -K(d) holds bit for bit.
  for (int a = 0; a < nx; ++a)
    for (int b = -(ny - 1); b < ny; ++b) {
      if (a == 0 && b <= 0) continue;
      const Vec2 g = morse_grad({a * hx, b * hy}, p);
      k.at(a, b) = g;
      k.at(-a, -b) = -g;
    }
  k.at(0, 0) = {};
  return k;
}

PotentialTable potential_table(const Axis& x, const Axis& y, const ModelParams& p) {
  const double hx = x.spacing(), hy = y.spacing();
  PotentialTable t(x.n, y.n);
  for (int a = -(x.n - 1); a < x.n; ++a)
    for (int b = -(y.n - 1); b < y.n; ++b) t.at(a, b) = morse(std::hypot(a * hx, b * hy), p);
  return t;
}

ForceField convolve_grad_u(const DensityField& rho, const KernelTable& kernel) {
  const int nx = rho.x.n, ny = rho.y.n;
  if (kernel.nx != nx || kernel.ny != ny)
    throw SolverError("convolve_grad_u: kernel built for a different grid");
  ForceField g(rho.x, rho.y);
  const double area = rho.cell_area();

  // Sources with zero density contribute nothing; collect the rest once.
  struct Source {
    int i, j;
    double m;
  };
  std::vector<Source> sources;
  for (int k = 0; k < nx; ++k)
    for (int l = 0; l < ny; ++l)
      if (double m = rho.at(k, l); m != 0.0) sources.push_back({k, l, m * area});

#pragma omp parallel for schedule(static)
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      Vec2 acc;
      for (const auto& s : sources) acc += kernel.at(i - s.i, j - s.j) * s.m;
      g.at(i, j) = acc;
    }
  return g;
}

DensityField convolve_u(const DensityField& rho, const PotentialTable& table) {
  const int nx = rho.x.n, ny = rho.y.n;
  if (table.nx != nx || table.ny != ny)
    throw SolverError("convolve_u: table built for a different grid");
  DensityField out(rho.x, rho.y);
  const double area = rho.cell_area();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      double acc = 0.0;
      for (int k = 0; k < nx; ++k)
        for (int l = 0; l < ny; ++l) acc += table.at(i - k, j - l) * rho.at(k, l);
      out.at(i, j) = acc * area;
    }
  return out;
}

Vec2 roosting_grad(Vec2 x, const ModelParams& p) {
  if (!p.roosting) return {};
  const double r = x.norm();
  if (r == 0.0) return {};
  const double R = p.roosting->radius;
  const double s = (p.roosting->b / R) * std::pow(r / R, 3) / r;
  return {s * x.x, s * x.y};
}

double roosting_potential(Vec2 x, const ModelParams& p) {
  if (!p.roosting) return 0.0;
  return 0.25 * p.roosting->b * std::pow(x.norm() / p.roosting->radius, 4);
}

}  // namespace swarmkin
