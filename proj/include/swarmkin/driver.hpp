#pragma once

// Initial conditions, the Strang-split time loop and the noise sweep.
//
// One step of length tau is
//   velocity substep (operators scaled by 1/2), exact spatial transport,
//   velocity substep (operators scaled by 1/2),
// each substep of full length tau.

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "swarmkin/analysis.hpp"
#include "swarmkin/core.hpp"
#include "swarmkin/fvm.hpp"
#include "swarmkin/potentials.hpp"
#include "swarmkin/semilag.hpp"

namespace swarmkin {

/// Indicator of {12 <= |x| <= 29, |(|v| - c)| <= 1/2, |v/|v| - x_perp/|x|| <= 0.15},
/// c the cruise speed, normalised to unit mass.
DistributionField single_mill_ic(const PhaseGrid& grid, const ModelParams& p);
/// Indicator of {12 <= |x| <= 29, |v| <= 1.6}, normalised to unit mass.
DistributionField double_mill_ic(const PhaseGrid& grid, const ModelParams& p);
/// rho_R(x) f_eq(v) with rho_R from large_a_density, unit mass. Needs A > 0.
DistributionField large_a_ic(const PhaseGrid& grid, const ModelParams& p);
DistributionField initial_condition(const PhaseGrid& grid, const ModelParams& p,
                                    InitialCondition ic);

struct DiagnosticRecord {
  long step = 0;
  double t = 0.0;
  double tau = 0.0;
  double mass = 0.0;
  double mill_distance = 0.0;
  double change_rate = 0.0;  // |f^{n+1} - f^n|_1 / (tau |f^n|_1)
};

struct RunState {
  DistributionField f;
  double t = 0.0;
  long step = 0;
  std::vector<DiagnosticRecord> history;
};

struct SolverOptions {
  double cfl = 0.45;
  double fixed_tau = 0.0;
  double cg_tol = 1e-10;
  int cg_max_iter = 0;
  /// Abort when one step changes the mass by more than this (relative).
  double max_mass_drift = 1e-6;
  AdvectOptions advect;
};

SolverOptions solver_options(const RunConfig& cfg);

class KineticSolver {
 public:
  KineticSolver(const PhaseGrid& grid, const ModelParams& params, const SolverOptions& opts = {});

  /// CFL-limited step for the current field (or the fixed step if set).
  double stable_tau(const DistributionField& f);
  /// One Strang step; returns |f^{n+1} - f^n|_1 / (tau |f^n|_1).
  double step(RunState& state, double tau);
  /// Velocity substep at every spatial node with the force of the current
  /// density. The velocity substep leaves the density unchanged, so a force
  /// computed by stable_tau() for the same field is reused.
  void velocity_substep(DistributionField& f, double tau);

  const PhaseGrid& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }
  const ForceField& force() const { return force_; }
  long total_cg_iterations() const { return cg_iterations_; }

 private:
  void update_force(const DistributionField& f);

  PhaseGrid grid_;
  ModelParams params_;
  SolverOptions opts_;
  KernelTable kernel_;
  VelocityStepper stepper_;
  ForceField force_;
  std::vector<Vec2> phi_grad_;
  std::vector<double> previous_;
  long cg_iterations_ = 0;
  bool force_current_ = false;
};

enum class StopReason { stationary, t_max, max_steps };
std::string to_string(StopReason r);

struct RunResult {
  RunState state;
  StopReason reason = StopReason::t_max;
  double last_change_rate = 0.0;
};

using ProgressFn = std::function<void(const DiagnosticRecord&)>;

/// Steps until the relative L1 change rate drops below cfg.tol_stat or the
/// time/step budget runs out; records diagnostics every cfg.history_every steps.
RunResult run_to_stationary(DistributionField f0, const RunConfig& cfg,
                            const ProgressFn& progress = {});

struct SweepRow {
  double a = 0.0;
  InitialCondition ic = InitialCondition::single_mill;
  double mill_distance = 0.0;
  StopReason reason = StopReason::t_max;
  double t = 0.0;
  bool ok = true;
  std::string error;
  /// Stationary field, kept only when requested.
  std::shared_ptr<DistributionField> field;
};

struct SweepOptions {
  bool keep_fields = false;
  ProgressFn progress;
  std::function<void(const SweepRow&)> on_row;
};

/// For each A and each initial condition: run to stationarity and evaluate the
/// mill distance. Failed runs are recorded and the sweep continues.
std::vector<SweepRow> noise_sweep(const RunConfig& cfg, std::span<const double> a_values,
                                  std::span<const InitialCondition> ics,
                                  const SweepOptions& opts = {});

// Spatially homogeneous problem: the velocity operator alone (full, not
// halved) on one node without interaction force.

struct HomogeneousOptions {
  double cfl = 0.45;
  double tol = 1e-9;  // stop when |f^{n+1} - f^n|_1 / (tau |f^n|_1) drops below
  long max_steps = 1000000;
  double cg_tol = 1e-12;
};

struct HomogeneousResult {
  VelocityField f;
  VelocityField f_eq;
  double l2_error = 0.0;   // sqrt(sum (f - f_eq)^2 h_u h_w)
  double peak_speed = 0.0; // |v| at the largest cell value
  long steps = 0;
  double t = 0.0;
  bool converged = false;
};

/// Starts from a unit Gaussian and steps to stationarity. Needs A > 0.
HomogeneousResult solve_homogeneous(const ModelParams& p, const Axis& u, const Axis& w,
                                    const HomogeneousOptions& opts = {});

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double error = 0.0;
  StopReason reason = StopReason::t_max;
  double t = 0.0;
};

struct ConvergenceOptions {
  ProgressFn progress;
  std::function<void(const ConvergenceRow&)> on_row;
  /// Called with each finished field, e.g. to cache it; n_ref runs included.
  std::function<void(int n, const DistributionField&)> on_field;
  /// Supplies a finished field for n instead of running it (cache lookup).
  std::function<std::optional<DistributionField>(int n)> lookup;
};

/// The grid ladder of cfg (same n on all four axes, bounds from cfg), each run
/// to stationarity from cfg.ic and compared with the reference density in the
/// midpoint L2 norm on the reference grid.
std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg,
                                              const ConvergenceOptions& opts = {});
/// The reference density of a convergence study.
DensityField convergence_reference(const RunConfig& cfg, const ConvergenceOptions& opts = {});
/// cfg with every axis set to n points.
RunConfig with_resolution(const RunConfig& cfg, int n);

}  // namespace swarmkin
