#pragma once

// Velocity substep: finite volumes on the (u, w) cells of one spatial node,
// limited Lax-Wendroff transport treated explicitly and the Fokker-Planck
// diffusion treated implicitly,
//
//   (I - tau A_D) f^{n+1} = (I - tau A_T) f^n.
//
// All operators carry a `scale` factor; the Strang driver uses 1/2.

#include <span>
#include <vector>

#include "swarmkin/core.hpp"

namespace swarmkin {

/// Compressed sparse row matrix.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;

  void multiply(std::span<const double> x, std::span<double> y) const;
  double at(int r, int c) const;
};

/// F(x, v) = v (alpha - beta |v|^2) - g - (grad phi . v_perp) v_perp - (A^2/2) v.
Vec2 drift(Vec2 g, Vec2 phi_grad, Vec2 v, const ModelParams& p);

/// phi(theta) = (theta + |theta|) / (1 + |theta|).
double van_leer(double theta);

/// Ratio of the upwind jump to the jump across the edge. Edge jumps smaller
/// than 1e-14 * f_scale count as smooth (theta = 1).
double smoothness_ratio(double upwind_jump, double edge_jump, double f_scale);

/// Interface value on the edge between cell k (lower) and l (upper), e the
/// axis direction k -> l: phi(theta) f_LW + (1 - phi(theta)) f_UW.
/// fk_e, fl_e, fkl_e are the drift components along e at the two centres
/// and at the edge midpoint.
double edge_value(double f_k, double f_l, double fk_e, double fl_e, double fkl_e, double tau,
                  double h, double theta);

/// Drift samples that do not depend on the spatial node, tabulated once per
/// grid: the self-propulsion/friction/noise part of F at cell centres and edge
/// midpoints.
struct VelocityStencil {
  int nu = 0, nw = 0;
  double hu = 0.0, hw = 0.0;
  std::vector<Vec2> v_center;      // nu * nw
  std::vector<double> pu_center;   // u component at centres
  std::vector<double> pw_center;   // w component at centres
  std::vector<double> pu_edge;     // (nu - 1) * nw, edge between (k, l) and (k + 1, l)
  std::vector<double> pw_edge;     // nu * (nw - 1), edge between (k, l) and (k, l + 1)
  std::vector<Vec2> v_edge_u;
  std::vector<Vec2> v_edge_w;

  VelocityStencil() = default;
  VelocityStencil(const PhaseGrid& grid, const ModelParams& p);

  /// Largest |P . e| over interior edges.
  double max_edge_drift() const;
};

struct VelocityOperators {
  CsrMatrix a_t;  // limited transport, frozen at the assembly slice
  CsrMatrix a_d;  // scale * (A^2/2) * Laplacian, zero-flux closure
};

/// Transport and diffusion matrices for one spatial node. The limiter makes
/// transport nonlinear; a_t is linearised about `slice`.
VelocityOperators assemble_operators(std::span<const double> slice, Vec2 x_force, Vec2 phi_grad,
                                     const PhaseGrid& grid, const ModelParams& params,
                                     double tau, double scale = 1.0);

/// scale * (A^2/2) * Laplacian with zero-flux boundary edges.
CsrMatrix diffusion_matrix(const PhaseGrid& grid, const ModelParams& params, double scale = 1.0);
/// I - tau * a_d.
CsrMatrix implicit_matrix(const CsrMatrix& a_d, double tau);

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // final |b - m x|_2 / |b|_2
};

/// Conjugate gradients for symmetric positive definite m. Starts from the
/// contents of x. Throws SolverError carrying the residual when tol is not
/// reached within max_iter iterations.
CgResult cg_solve(const CsrMatrix& m, std::span<const double> b, std::span<double> x, double tol,
                  int max_iter);
std::vector<double> cg_solve(const CsrMatrix& m, std::span<const double> b, double tol,
                             int max_iter);

/// Per-thread scratch for velocity_halfstep.
struct HalfstepWorkspace {
  std::vector<double> rate, rhs;
};

struct HalfstepStats {
  int cg_iterations = 0;
};

/// Solver-owned data shared by every velocity substep on one grid.
class VelocityStepper {
 public:
  VelocityStepper(const PhaseGrid& grid, const ModelParams& params, double scale, double cg_tol,
                  int cg_max_iter);

  /// Limited transport rate (a_t f) computed directly from edge fluxes.
  void transport_rate(std::span<const double> f, Vec2 x_force, Vec2 phi_grad, double tau,
                      std::span<double> out) const;

  /// Builds I - tau a_d for the coming steps. Call before step(); not
  /// thread safe, unlike step().
  void prepare(double tau);

  /// f <- (I - tau a_d)^{-1} (I - tau a_t) f, in place. tau must match the
  /// last prepare() when diffusion is active.
  HalfstepStats step(std::span<double> f, Vec2 x_force, Vec2 phi_grad, double tau,
                     HalfstepWorkspace& ws) const;

  /// Bound on |scale * F . e| over edges for forces up to max_force.
  double max_velocity_speed(double max_force, double max_phi_grad) const;

  const VelocityStencil& stencil() const { return stencil_; }
  double diffusion() const { return diffusion_; }

 private:
  PhaseGrid grid_;
  ModelParams params_;
  double scale_;
  double cg_tol_;
  int cg_max_iter_;
  double diffusion_;
  VelocityStencil stencil_;
  CsrMatrix a_d_;
  double prepared_tau_ = -1.0;
  CsrMatrix implicit_;
};

/// Convenience wrapper: one velocity substep on a standalone slice.
std::vector<double> velocity_halfstep(std::span<const double> slice, Vec2 x_force, Vec2 phi_grad,
                                      const PhaseGrid& grid, const ModelParams& params,
                                      double tau, double scale = 0.5, double cg_tol = 1e-10);

}  // namespace swarmkin
