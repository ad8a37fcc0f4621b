// swarmkin: command-line front end for the kinetic solver, the particle
// system and the analysis tools. Every subcommand reads the flat config
// format; `--set key=value` overrides single entries.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>

#include <cmath>
#endif

#include "CLI11.hpp"
#include "swarmkin/driver.hpp"
#include "swarmkin/io.hpp"
#include "swarmkin/particles.hpp"

namespace fs = std::filesystem;
using namespace swarmkin;

namespace {

constexpr const char* kThreadsEnv = "SWARMKIN_THREADS";

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

// Without --config the built-in defaults apply.
void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "run configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "override a config entry, key=value (repeatable)");
  cmd->add_option("-o,--out", c.out, "output directory (default: output_dir from the config)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    cfg.source += "\n" + kv;
  }
  cfg.params.validate();
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  return dir;
}

const std::vector<std::string> kHistoryColumns{"step", "t", "tau", "mass", "mill_distance",
                                               "change_rate"};

void history_row(CsvWriter& csv, const DiagnosticRecord& d) {
  csv.cell(d.step).cell(d.t).cell(d.tau).cell(d.mass).cell(d.mill_distance).cell(d.change_rate);
  csv.end_row();
}

void write_density(const fs::path& path, const DensityField& rho, const std::string& hash) {
  CsvWriter csv(path.string(), hash, {"x", "y", "rho"});
  for (int i = 0; i < rho.x.n; ++i)
    for (int j = 0; j < rho.y.n; ++j) {
      csv.cell(rho.x.point(i)).cell(rho.y.point(j)).cell(rho.at(i, j));
      csv.end_row();
    }
}

void write_radial(const fs::path& path, const RadialProfile& r, const std::string& hash) {
  CsvWriter csv(path.string(), hash, {"r", "mean", "count"});
  for (std::size_t b = 0; b < r.r.size(); ++b) {
    csv.cell(r.r[b]).cell(r.mean[b]).cell(r.count[b]);
    csv.end_row();
  }
}

void write_probes(const fs::path& path, const std::vector<ProbeSlice>& probes,
                  const std::string& hash) {
  CsvWriter csv(path.string(), hash, {"probe", "i", "j", "x", "y", "u", "w", "f"});
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& s = probes[p];
    for (int k = 0; k < s.slice.u.n; ++k)
      for (int l = 0; l < s.slice.w.n; ++l) {
        csv.cell(long(p)).cell(s.i).cell(s.j).cell(s.x.x).cell(s.x.y);
        csv.cell(s.slice.u.point(k)).cell(s.slice.w.point(l)).cell(s.slice.at(k, l));
        csv.end_row();
      }
  }
}

void write_diagnostics(const fs::path& dir, const DistributionField& f, const RunConfig& cfg,
                       const std::string& hash, int bins, double probe_radius) {
  const DensityField rho = marginal_density(f);
  write_density(dir / "density.csv", rho, hash);
  write_radial(dir / "radial.csv", radial_profile(rho, bins), hash);
  const auto probes = default_probes(f.grid, probe_radius);
  write_probes(dir / "probes.csv", velocity_marginals_at(f, probes), hash);
  auto mill = [&](bool normalized) {
    try {
      return mill_distance(f, cfg.params, {cfg.eps_supp, normalized});
    } catch (const SolverError&) {
      return double(NAN);  // no support away from the origin
    }
  };
  const double md = mill(false), mdn = mill(true);
  std::printf("mass %.12g\nmill_distance %.8g\nmill_distance_normalized %.8g\n", total_mass(f), md,
              mdn);
}

ProgressFn progress_printer(bool quiet) {
  if (quiet) return {};
  return [](const DiagnosticRecord& d) {
    std::fprintf(stderr, "step %ld  t %.4f  tau %.5f  mass %.12f  mill %.6g  rate %.3e\n", d.step,
                 d.t, d.tau, d.mass, d.mill_distance, d.change_rate);
  };
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in list");
    }
  }
  return out;
}

std::vector<InitialCondition> parse_ics(const std::string& text) {
  std::vector<InitialCondition> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_initial_condition(item));
  return out;
}

std::string field_path(const fs::path& dir, const std::string& tag, int n) {
  return (dir / (tag + "_n" + std::to_string(n) + ".field")).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic and particle simulation of self-propelled swarms"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (default: $" + std::string(kThreadsEnv) +
                                           " or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", quiet, "no progress output");

  Common kin_c, part_c, fp_c, conv_c, sweep_c, diag_c;

  // kinetic
  auto* kinetic = app.add_subcommand("kinetic", "run the kinetic solver to stationarity");
  add_common(kinetic, kin_c);
  int kin_bins = 30;
  double kin_probe = 20.0;
  kinetic->add_option("--bins", kin_bins, "radial profile bins")->check(CLI::PositiveNumber);
  kinetic->add_option("--probe-radius", kin_probe, "radius of the default probe nodes");

  // particles
  auto* particles = app.add_subcommand("particles", "run the particle system and histogram it");
  add_common(particles, part_c);
  int part_bins = 30;
  particles->add_option("--bins", part_bins, "radial profile bins")->check(CLI::PositiveNumber);

  // homogeneous
  auto* homogeneous =
      app.add_subcommand("homogeneous", "velocity-only problem against the analytic equilibrium");
  double hom_a = 0.15, hom_alpha = 0.07, hom_beta = 0.05, hom_vmax = 3.0;
  int hom_n = 32;
  homogeneous->add_option("--a", hom_a, "noise amplitude A")->required();
  homogeneous->add_option("--n", hom_n, "velocity cells per axis")->required()->check(CLI::Range(4, 100000));
  homogeneous->add_option("--alpha", hom_alpha, "self-propulsion");
  homogeneous->add_option("--beta", hom_beta, "friction");
  homogeneous->add_option("--vmax", hom_vmax, "velocity box half width");

  // fixed-point
  auto* fixed = app.add_subcommand("fixed-point", "large-noise density by Picard iteration");
  add_common(fixed, fp_c);
  int fp_n = 0;
  int fp_bins = 30;
  fixed->add_option("--n", fp_n, "points per spatial axis (default: n_ref from the config)");
  fixed->add_option("--bins", fp_bins, "radial profile bins")->check(CLI::PositiveNumber);

  // convergence
  auto* convergence = app.add_subcommand("convergence", "grid ladder against a reference");
  add_common(convergence, conv_c);
  std::string conv_cache;
  convergence->add_option("--cache", conv_cache, "directory for reusable field dumps");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "stationary mill distance over noise amplitudes");
  add_common(sweep, sweep_c);
  std::string sweep_a = "0,0.05,0.1,0.123,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  std::string sweep_ic = "single,double";
  bool sweep_dump = false;
  sweep->add_option("--a", sweep_a, "comma separated noise amplitudes, ascending");
  sweep->add_option("--ic", sweep_ic, "comma separated initial conditions");
  sweep->add_flag("--dump", sweep_dump, "write the stationary field of every run");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "diagnostics of a field dump");
  add_common(diagnose, diag_c);
  std::string diag_field;
  int diag_bins = 30;
  double diag_probe = 20.0;
  diagnose->add_option("field", diag_field, "field dump")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--bins", diag_bins, "radial profile bins")->check(CLI::PositiveNumber);
  diagnose->add_option("--probe-radius", diag_probe, "radius of the default probe nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

#ifdef _OPENMP
  if (threads <= 0)
    if (const char* env = std::getenv(kThreadsEnv)) threads = std::atoi(env);
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (*kinetic) {
      const RunConfig cfg = resolve(kin_c);
      const std::string hash = config_hash(cfg.source);
      const fs::path dir = output_dir(cfg);
      const PhaseGrid grid = build_grid(cfg);
      // streamed so long runs can be watched
      CsvWriter history((dir / "history.csv").string(), hash, kHistoryColumns);
      const ProgressFn print = progress_printer(quiet);
      RunResult res = run_to_stationary(initial_condition(grid, cfg.params, cfg.ic), cfg,
                                        [&](const DiagnosticRecord& d) {
                                          history_row(history, d);
                                          if (print) print(d);
                                        });
      dump_field(res.state.f, (dir / "field.dump").string(),
                 "config_hash=" + hash + " t=" + format_double(res.state.t) +
                     " step=" + std::to_string(res.state.step));
      std::printf("stop %s\nt %.6g\nsteps %ld\n", to_string(res.reason).c_str(), res.state.t,
                  res.state.step);
      write_diagnostics(dir, res.state.f, cfg, hash, kin_bins, kin_probe);
    } else if (*particles) {
      const RunConfig cfg = resolve(part_c);
      const std::string hash = config_hash(cfg.source);
      const fs::path dir = output_dir(cfg);
      ParticleEnsemble e = sample_ensemble(cfg.n_particles, cfg.ic, cfg.params, cfg.seed);
      const long report = std::max(1L, long(10.0 / cfg.particle_tau));
      run_particles(e, cfg.particle_tau, cfg.particle_t_max, cfg.params, cfg.seed + 1,
                    [&](long step, double t, const ParticleEnsemble&) {
                      if (!quiet && step % report == 0)
                        std::fprintf(stderr, "step %ld  t %.3f\n", step, t);
                    });
      write_particles_csv((dir / "particles.csv").string(), e, hash);
      const Histogram h = histogram_4d(e, build_grid(cfg));
      dump_field(h.f, (dir / "histogram.dump").string(), "config_hash=" + hash);
      const DensityField rho = marginal_density(h.f);
      write_density(dir / "density.csv", rho, hash);
      write_radial(dir / "radial.csv", radial_profile(rho, part_bins), hash);
      std::printf("particles %zu\nout_of_range %zu\n", e.size(), h.out_of_range);
    } else if (*homogeneous) {
      ModelParams p;
      p.alpha = hom_alpha;
      p.beta = hom_beta;
      p.noise_a = hom_a;
      p.validate();
      const Axis v{-hom_vmax, hom_vmax, hom_n, true};
      const HomogeneousResult r = solve_homogeneous(p, v, v);
      std::printf("n %d\nh %.8g\nl2_error %.10g\npeak_speed %.8g\nanalytic_peak_speed %.8g\n"
                  "steps %ld\nt %.6g\nconverged %s\n",
                  hom_n, v.spacing(), r.l2_error, r.peak_speed, equilibrium_peak_speed(p),
                  r.steps, r.t, r.converged ? "yes" : "no");
      if (!r.converged) return 1;
    } else if (*fixed) {
      RunConfig cfg = resolve(fp_c);
      const std::string hash = config_hash(cfg.source);
      const fs::path dir = output_dir(cfg);
      const int n = fp_n > 0 ? fp_n : cfg.n_ref;
      cfg.x.n = cfg.y.n = n;
      const FixedPointResult r = large_a_density(cfg.x, cfg.y, cfg.params);
      write_density(dir / "fixed_point.csv", r.rho, hash);
      write_radial(dir / "fixed_point_radial.csv", radial_profile(r.rho, fp_bins), hash);
      CsvWriter res((dir / "fixed_point_residuals.csv").string(), hash, {"iteration", "residual"});
      for (std::size_t i = 0; i < r.residuals.size(); ++i) {
        res.cell(long(i + 1)).cell(r.residuals[i]);
        res.end_row();
      }
      std::printf("iterations %d\nresidual %.3e\n", r.iterations,
                  r.residuals.empty() ? 0.0 : r.residuals.back());
    } else if (*convergence) {
      const RunConfig cfg = resolve(conv_c);
      const std::string hash = config_hash(cfg.source);
      const fs::path dir = output_dir(cfg);
      ConvergenceOptions o;
      o.progress = progress_printer(quiet);
      if (!conv_cache.empty()) {
        fs::create_directories(conv_cache);
        o.lookup = [&](int n) -> std::optional<DistributionField> {
          const std::string p = field_path(conv_cache, hash, n);
          if (!fs::exists(p)) return std::nullopt;
          return load_field(p);
        };
        o.on_field = [&](int n, const DistributionField& f) {
          dump_field(f, field_path(conv_cache, hash, n), "config_hash=" + hash);
        };
      }
      CsvWriter csv((dir / "convergence.csv").string(), hash, {"n", "h", "error"});
      std::printf("n,h,error\n");
      o.on_row = [&](const ConvergenceRow& r) {
        csv.cell(r.n).cell(r.h).cell(r.error);
        csv.end_row();
        std::printf("%d,%s,%s\n", r.n, format_double(r.h).c_str(), format_double(r.error).c_str());
        std::fflush(stdout);
      };
      const auto rows = convergence_study(cfg, o);
      if (rows.size() >= 2) {
        std::vector<double> h, e;
        for (const auto& r : rows) {
          h.push_back(r.h);
          e.push_back(r.error);
        }
        std::printf("# order %.4f\n", fit_order(h, e));
      }
    } else if (*sweep) {
      const RunConfig cfg = resolve(sweep_c);
      const std::string hash = config_hash(cfg.source);
      const fs::path dir = output_dir(cfg);
      const std::vector<double> as = parse_list(sweep_a);
      const std::vector<InitialCondition> ics = parse_ics(sweep_ic);
      CsvWriter csv((dir / "sweep.csv").string(), hash,
                    {"a", "ic", "mill_distance", "reason", "t", "ok"});
      SweepOptions o;
      o.progress = progress_printer(quiet);
      o.keep_fields = sweep_dump;
      int failures = 0;
      o.on_row = [&](const SweepRow& r) {
        csv.cell(r.a).cell(to_string(r.ic)).cell(r.mill_distance).cell(to_string(r.reason));
        csv.cell(r.t).cell(std::string(r.ok ? "1" : "0"));
        csv.end_row();
        if (!r.ok) {
          ++failures;
          std::fprintf(stderr, "run a=%g ic=%s failed: %s\n", r.a, to_string(r.ic).c_str(),
                       r.error.c_str());
        }
        if (r.field)
          dump_field(*r.field,
                     (dir / ("sweep_a" + format_double(r.a) + "_" + to_string(r.ic) + ".dump")).string(),
                     "config_hash=" + hash);
        std::printf("%s,%s,%s\n", format_double(r.a).c_str(), to_string(r.ic).c_str(),
                    format_double(r.mill_distance).c_str());
        std::fflush(stdout);
      };
      noise_sweep(cfg, as, ics, o);
      if (failures > 0) return 1;
    } else if (*diagnose) {
      const RunConfig cfg = resolve(diag_c);
      const std::string hash = config_hash(cfg.source);
      const fs::path dir = output_dir(cfg);
      const DistributionField f = load_field(diag_field);
      write_diagnostics(dir, f, cfg, hash, diag_bins, diag_probe);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
