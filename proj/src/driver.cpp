#include "swarmkin/driver.hpp"

#include <algorithm>
#include <cmath>

namespace swarmkin {

namespace {

constexpr double kRingInner = 12.0;
constexpr double kRingOuter = 29.0;

template <class Pred>
DistributionField indicator_ic(const PhaseGrid& grid, Pred&& inside) {
  if (grid.x.lo > -kRingOuter || grid.x.hi < kRingOuter || grid.y.lo > -kRingOuter ||
      grid.y.hi < kRingOuter)
    throw ConfigError("initial condition: spatial box does not contain the ring 12 <= |x| <= 29");
  DistributionField f(grid);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      const Vec2 x = grid.position(i, j);
      const double r = x.norm();
      if (r < kRingInner || r > kRingOuter) continue;
      for (int k = 0; k < grid.nu(); ++k)
        for (int l = 0; l < grid.nw(); ++l)
          if (inside(x, grid.velocity(k, l))) f.at(i, j, k, l) = 1.0;
    }
  const double m = total_mass(f);
  if (m == 0.0) throw ConfigError("initial condition: no grid point falls in the support");
  const double c = 1.0 / m;
  for (double& v : f.values) v *= c;
  return f;
}

}  // namespace

DistributionField single_mill_ic(const PhaseGrid& grid, const ModelParams& p) {
  const double c = p.cruise_speed();
  return indicator_ic(grid, [c](Vec2 x, Vec2 v) {
    const double s = v.norm();
    if (s < c - 0.5 || s > c + 0.5 || s == 0.0) return false;
    const Vec2 dir = v * (1.0 / s) - x.perp() * (1.0 / x.norm());
    return dir.norm() <= 0.15;
  });
}

DistributionField double_mill_ic(const PhaseGrid& grid, const ModelParams&) {
  return indicator_ic(grid, [](Vec2, Vec2 v) { return v.norm() <= 1.6; });
}

DistributionField large_a_ic(const PhaseGrid& grid, const ModelParams& p) {
  if (!(p.noise_a > 0.0)) throw ConfigError("initial condition large_a needs A > 0");
  const DensityField rho = large_a_density(grid.x, grid.y, p).rho;
  const VelocityField eq = homogeneous_equilibrium(p, grid);
  DistributionField f(grid);
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j) {
      auto s = f.slice(i, j);
      for (std::size_t q = 0; q < s.size(); ++q) s[q] = rho.at(i, j) * eq.values[q];
    }
  const double c = 1.0 / total_mass(f);
  for (double& v : f.values) v *= c;
  return f;
}

DistributionField initial_condition(const PhaseGrid& grid, const ModelParams& p,
                                    InitialCondition ic) {
  switch (ic) {
    case InitialCondition::single_mill: return single_mill_ic(grid, p);
    case InitialCondition::double_mill: return double_mill_ic(grid, p);
    case InitialCondition::large_a: return large_a_ic(grid, p);
  }
  throw ConfigError("unknown initial condition");
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.cfl = cfg.cfl;
  o.fixed_tau = cfg.fixed_tau;
  o.cg_tol = cfg.cg_tol;
  o.cg_max_iter = cfg.cg_max_iter;
  return o;
}

KineticSolver::KineticSolver(const PhaseGrid& grid, const ModelParams& params,
                             const SolverOptions& opts)
    : grid_(grid),
      params_(params),
      opts_(opts),
      kernel_(kernel_table(grid, params)),
      stepper_(grid, params, 0.5, opts.cg_tol, opts.cg_max_iter),
      force_(grid.x, grid.y) {
  params_.validate();
  phi_grad_.resize(grid.spatial_size());
  for (int i = 0; i < grid.nx(); ++i)
    for (int j = 0; j < grid.ny(); ++j)
      phi_grad_[grid.spatial_index(i, j)] = roosting_grad(grid.position(i, j), params);
}

void KineticSolver::update_force(const DistributionField& f) {
  force_ = convolve_grad_u(marginal_density(f), kernel_);
}

double KineticSolver::stable_tau(const DistributionField& f) {
  if (opts_.fixed_tau > 0.0) return opts_.fixed_tau;
  update_force(f);
  force_current_ = true;
  double max_force = 0.0, max_phi = 0.0;
  for (Vec2 g : force_.values) max_force = std::max({max_force, std::abs(g.x), std::abs(g.y)});
  for (Vec2 g : phi_grad_) max_phi = std::max(max_phi, g.norm());
  const double vmax = std::hypot(std::max(std::abs(grid_.u.lo), std::abs(grid_.u.hi)),
                                 std::max(std::abs(grid_.w.lo), std::abs(grid_.w.hi)));
  const double speed = stepper_.max_velocity_speed(max_force, max_phi);
  double tau = std::min(grid_.hx(), grid_.hy()) / vmax;
  if (speed > 0.0) tau = std::min(tau, std::min(grid_.hu(), grid_.hw()) / speed);
  return opts_.cfl * tau;
}

void KineticSolver::velocity_substep(DistributionField& f, double tau) {
  if (!force_current_) update_force(f);
  force_current_ = false;
  stepper_.prepare(tau);
  const int nx = grid_.nx(), ny = grid_.ny();
  long iterations = 0;
#pragma omp parallel reduction(+ : iterations)
  {
    HalfstepWorkspace ws;
#pragma omp for schedule(dynamic, 4)
    for (int ij = 0; ij < nx * ny; ++ij) {
      const int i = ij / ny, j = ij % ny;
      auto s = f.slice(i, j);
      if (std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; })) continue;
      iterations += stepper_.step(s, force_.at(i, j), phi_grad_[ij], tau, ws).cg_iterations;
    }
  }
  cg_iterations_ += iterations;
}

double KineticSolver::step(RunState& state, double tau) {
  if (!(tau > 0.0)) throw SolverError("strang step: tau must be positive");
  auto& f = state.f;
  previous_ = f.values;
  const double mass_before = total_mass(f);

  velocity_substep(f, tau);
  advect_step(f, tau, opts_.advect);
  force_current_ = false;
  velocity_substep(f, tau);

  const double mass_after = total_mass(f);
  if (!(std::abs(mass_after - mass_before) <= opts_.max_mass_drift * std::abs(mass_before)))
    throw SolverError("strang step: mass changed from " + std::to_string(mass_before) + " to " +
                      std::to_string(mass_after) + " in one step");

  double diff = 0.0, norm = 0.0;
  for (std::size_t n = 0; n < f.values.size(); ++n) {
    diff += std::abs(f.values[n] - previous_[n]);
    norm += std::abs(previous_[n]);
  }
  state.t += tau;
  state.step += 1;
  return norm > 0.0 ? diff / (tau * norm) : 0.0;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::stationary: return "stationary";
    case StopReason::t_max: return "t_max";
    case StopReason::max_steps: return "max_steps";
  }
  return "?";
}

RunResult run_to_stationary(DistributionField f0, const RunConfig& cfg,
                            const ProgressFn& progress) {
  KineticSolver solver(f0.grid, cfg.params, solver_options(cfg));
  RunResult res;
  res.state.f = std::move(f0);
  auto& st = res.state;
  const MillDistanceOptions mill{cfg.eps_supp, false};

  auto record = [&](double tau, double rate) {
    DiagnosticRecord d{st.step, st.t, tau, total_mass(st.f), 0.0, rate};
    try {
      d.mill_distance = mill_distance(st.f, cfg.params, mill);
    } catch (const SolverError&) {
      d.mill_distance = NAN;
    }
    st.history.push_back(d);
    if (progress) progress(d);
  };

  record(0.0, NAN);
  double last_tau = 0.0;
  const int every = std::max(1, cfg.history_every);
  while (true) {
    if (st.t >= cfg.t_max) {
      res.reason = StopReason::t_max;
      break;
    }
    if (cfg.max_steps > 0 && st.step >= cfg.max_steps) {
      res.reason = StopReason::max_steps;
      break;
    }
    // no clipping to t_max: a sliver step inflates the change rate
    const double tau = solver.stable_tau(st.f);
    last_tau = tau;
    const double rate = solver.step(st, tau);
    res.last_change_rate = rate;
    const bool stationary = rate < cfg.tol_stat;
    if (st.step % every == 0 || stationary) record(tau, rate);
    if (stationary) {
      res.reason = StopReason::stationary;
      break;
    }
  }
  if (st.history.back().step != st.step) record(last_tau, res.last_change_rate);
  return res;
}

std::vector<SweepRow> noise_sweep(const RunConfig& cfg, std::span<const double> a_values,
                                  std::span<const InitialCondition> ics,
                                  const SweepOptions& opts) {
  if (!std::is_sorted(a_values.begin(), a_values.end()))
    throw ConfigError("noise_sweep: noise values must be sorted");
  const PhaseGrid grid = build_grid(cfg);
  std::vector<SweepRow> rows;
  for (double a : a_values)
    for (InitialCondition ic : ics) {
      SweepRow row;
      row.a = a;
      row.ic = ic;
      try {
        RunConfig run = cfg;
        run.params.noise_a = a;
        run.ic = ic;
        RunResult res = run_to_stationary(initial_condition(grid, run.params, ic), run,
                                          opts.progress);
        row.reason = res.reason;
        row.t = res.state.t;
        row.mill_distance = mill_distance(res.state.f, run.params, {cfg.eps_supp, false});
        if (opts.keep_fields)
          row.field = std::make_shared<DistributionField>(std::move(res.state.f));
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        row.mill_distance = NAN;
      }
      if (opts.on_row) opts.on_row(row);
      rows.push_back(std::move(row));
    }
  return rows;
}

HomogeneousResult solve_homogeneous(const ModelParams& p, const Axis& u, const Axis& w,
                                    const HomogeneousOptions& opts) {
  if (!(p.noise_a > 0.0)) throw ConfigError("homogeneous problem needs A > 0");
  // A single spatial node; the spatial axes only complete the grid.
  const PhaseGrid grid = make_grid({-1, 1, 4, false}, {-1, 1, 4, false}, u, w);
  VelocityStepper stepper(grid, p, 1.0, opts.cg_tol, 0);
  const double speed = stepper.max_velocity_speed(0.0, 0.0);
  const double tau = opts.cfl * std::min(grid.hu(), grid.hw()) / speed;
  stepper.prepare(tau);

  HomogeneousResult res;
  res.f_eq = homogeneous_equilibrium(p, grid);
  res.f = res.f_eq;
  for (int k = 0; k < grid.nu(); ++k)
    for (int l = 0; l < grid.nw(); ++l)
      res.f.values[grid.velocity_index(k, l)] = std::exp(-0.5 * grid.velocity(k, l).norm2());
  const double m0 = res.f.mass();
  for (double& v : res.f.values) v /= m0;

  HalfstepWorkspace ws;
  std::vector<double> prev;
  while (res.steps < opts.max_steps) {
    prev = res.f.values;
    stepper.step(res.f.values, {}, {}, tau, ws);
    ++res.steps;
    res.t += tau;
    double diff = 0.0, norm = 0.0;
    for (std::size_t q = 0; q < prev.size(); ++q) {
      diff += std::abs(res.f.values[q] - prev[q]);
      norm += std::abs(prev[q]);
    }
    if (diff / (tau * norm) < opts.tol) {
      res.converged = true;
      break;
    }
  }
  double e = 0.0, best = -1.0;
  for (int k = 0; k < grid.nu(); ++k)
    for (int l = 0; l < grid.nw(); ++l) {
      const std::size_t q = grid.velocity_index(k, l);
      e += std::pow(res.f.values[q] - res.f_eq.values[q], 2);
      if (res.f.values[q] > best) {
        best = res.f.values[q];
        res.peak_speed = grid.velocity(k, l).norm();
      }
    }
  res.l2_error = std::sqrt(e * grid.velocity_cell_volume());
  return res;
}

RunConfig with_resolution(const RunConfig& cfg, int n) {
  RunConfig c = cfg;
  c.x.n = c.y.n = c.u.n = c.w.n = n;
  return c;
}

namespace {

DistributionField converged_field(const RunConfig& cfg, int n, const ConvergenceOptions& opts,
                                  ConvergenceRow* row) {
  if (opts.lookup)
    if (auto f = opts.lookup(n)) return std::move(*f);
  const RunConfig run = with_resolution(cfg, n);
  const PhaseGrid grid = build_grid(run);
  RunResult res = run_to_stationary(initial_condition(grid, run.params, run.ic), run, opts.progress);
  if (row) {
    row->reason = res.reason;
    row->t = res.state.t;
  }
  if (opts.on_field) opts.on_field(n, res.state.f);
  return std::move(res.state.f);
}

}  // namespace

DensityField convergence_reference(const RunConfig& cfg, const ConvergenceOptions& opts) {
  if (cfg.reference == ReferenceKind::fixed_point) {
    const RunConfig r = with_resolution(cfg, cfg.n_ref);
    return large_a_density(r.x, r.y, r.params).rho;
  }
  return marginal_density(converged_field(cfg, cfg.n_ref, opts, nullptr));
}

std::vector<ConvergenceRow> convergence_study(const RunConfig& cfg,
                                              const ConvergenceOptions& opts) {
  const DensityField ref = convergence_reference(cfg, opts);
  std::vector<ConvergenceRow> rows;
  for (int n : cfg.ladder) {
    ConvergenceRow row;
    row.n = n;
    const DistributionField f = converged_field(cfg, n, opts, &row);
    row.h = f.grid.hx();
    row.error = l2_density_error(marginal_density(f), ref);
    if (opts.on_row) opts.on_row(row);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace swarmkin
