#pragma once

// Shared vocabulary: model parameters, the 2D x 2D phase grid, fields on it,
// and the run configuration read from flat key = value files.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmkin {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  /// Counter-clockwise rotation by 90 degrees.
  Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

/// Radial roosting potential phi(x) = (b/4) (|x|/R)^4.
struct Roosting {
  double b = 0.0;
  double radius = 1.0;
};

struct ModelParams {
  double alpha = 0.07;   // self-propulsion
  double beta = 0.05;    // friction
  double c_a = 20.0;     // attraction amplitude
  double c_r = 50.0;     // repulsion amplitude
  double l_a = 100.0;    // attraction length
  double l_r = 2.0;      // repulsion length
  double noise_a = 0.0;  // stochastic amplitude A
  std::optional<Roosting> roosting;

  double cruise_speed() const { return std::sqrt(alpha / beta); }
  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// One grid axis. Spatial axes are node based (points on both bounds);
/// velocity axes are cell centred (cells tile [lo, hi]).
struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int n = 4;
  bool cell_centered = false;

  double spacing() const { return cell_centered ? (hi - lo) / n : (hi - lo) / (n - 1); }
  double point(int i) const {
    return cell_centered ? lo + (i + 0.5) * spacing() : lo + i * spacing();
  }
  /// Width covered by the quadrature cells, n * h. For node-based axes the
  /// cells around the end nodes overhang the bounds by h/2.
  double quadrature_span() const { return n * spacing(); }
  bool operator==(const Axis&) const = default;
};

/// Tensor grid over (x, y, u, w). Values are stored row-major with x slowest
/// and w fastest: index = ((i * n_y + j) * n_u + k) * n_w + l.
struct PhaseGrid {
  Axis x, y, u, w;

  int nx() const { return x.n; }
  int ny() const { return y.n; }
  int nu() const { return u.n; }
  int nw() const { return w.n; }
  double hx() const { return x.spacing(); }
  double hy() const { return y.spacing(); }
  double hu() const { return u.spacing(); }
  double hw() const { return w.spacing(); }

  std::size_t spatial_size() const { return std::size_t(x.n) * y.n; }
  std::size_t velocity_size() const { return std::size_t(u.n) * w.n; }
  std::size_t size() const { return spatial_size() * velocity_size(); }

  std::size_t index(int i, int j, int k, int l) const {
    return ((std::size_t(i) * y.n + j) * u.n + k) * w.n + l;
  }
  std::size_t spatial_index(int i, int j) const { return std::size_t(i) * y.n + j; }
  std::size_t velocity_index(int k, int l) const { return std::size_t(k) * w.n + l; }

  Vec2 position(int i, int j) const { return {x.point(i), y.point(j)}; }
  Vec2 velocity(int k, int l) const { return {u.point(k), w.point(l)}; }

  double spatial_cell_volume() const { return hx() * hy(); }
  double velocity_cell_volume() const { return hu() * hw(); }
  double cell_volume() const { return spatial_cell_volume() * velocity_cell_volume(); }
  /// Volume of the phase box as seen by the cell-sum quadrature.
  double box_volume() const {
    return x.quadrature_span() * y.quadrature_span() * u.quadrature_span() *
           w.quadrature_span();
  }

  bool operator==(const PhaseGrid&) const = default;
};

struct DistributionField {
  PhaseGrid grid;
  std::vector<double> values;

  DistributionField() = default;
  explicit DistributionField(const PhaseGrid& g) : grid(g), values(g.size(), 0.0) {}

  double& at(int i, int j, int k, int l) { return values[grid.index(i, j, k, l)]; }
  double at(int i, int j, int k, int l) const { return values[grid.index(i, j, k, l)]; }

  /// Velocity slice at spatial node (i, j); contiguous in memory.
  std::span<double> slice(int i, int j) {
    return {values.data() + grid.index(i, j, 0, 0), grid.velocity_size()};
  }
  std::span<const double> slice(int i, int j) const {
    return {values.data() + grid.index(i, j, 0, 0), grid.velocity_size()};
  }
};

/// Spatial density on the (x, y) nodes of a grid.
struct DensityField {
  Axis x, y;
  std::vector<double> values;  // index i * n_y + j

  DensityField() = default;
  DensityField(const Axis& ax, const Axis& ay)
      : x(ax), y(ay), values(std::size_t(ax.n) * ay.n, 0.0) {}

  double& at(int i, int j) { return values[std::size_t(i) * y.n + j]; }
  double at(int i, int j) const { return values[std::size_t(i) * y.n + j]; }
  double cell_area() const { return x.spacing() * y.spacing(); }
  double mass() const;
};

/// (grad U * rho) sampled on the spatial nodes.
struct ForceField {
  Axis x, y;
  std::vector<Vec2> values;

  ForceField() = default;
  ForceField(const Axis& ax, const Axis& ay) : x(ax), y(ay), values(std::size_t(ax.n) * ay.n) {}

  Vec2& at(int i, int j) { return values[std::size_t(i) * y.n + j]; }
  Vec2 at(int i, int j) const { return values[std::size_t(i) * y.n + j]; }
};

/// large_a: the large-noise state rho_R(x) f_eq(v), rho_R the fixed point of
/// the density equation. Kinetic runs only; needs A > 0.
enum class InitialCondition { single_mill, double_mill, large_a };

std::string to_string(InitialCondition ic);
InitialCondition parse_initial_condition(const std::string& name);

/// What a convergence ladder is measured against: the large-noise fixed point
/// or the run on the finest grid n_ref.
enum class ReferenceKind { fixed_point, self };

std::string to_string(ReferenceKind r);

struct RunConfig {
  Axis x{-50.0, 50.0, 30, false};
  Axis y{-50.0, 50.0, 30, false};
  Axis u{-3.0, 3.0, 30, true};
  Axis w{-3.0, 3.0, 30, true};
  ModelParams params;

  // time stepping
  double cfl = 0.45;
  double fixed_tau = 0.0;  // > 0 overrides the CFL policy
  double cg_tol = 1e-10;
  int cg_max_iter = 0;  // 0 -> 10 * n_u * n_w

  InitialCondition ic = InitialCondition::single_mill;

  // stop criteria
  double tol_stat = 1e-6;
  double t_max = 500.0;
  long max_steps = 0;  // 0 -> unlimited
  int history_every = 10;

  // diagnostics
  double eps_supp = 1e-3;

  // convergence ladder; every axis uses the same point count
  std::vector<int> ladder{15, 22, 30, 45};
  ReferenceKind reference = ReferenceKind::fixed_point;
  int n_ref = 91;

  // particles
  int n_particles = 13000;
  std::uint64_t seed = 1;
  double particle_tau = 0.05;
  double particle_t_max = 300.0;

  std::string output_dir = "out";
  /// Source text the config was parsed from; used for the output hash.
  std::string source;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys throw.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Applies one key/value pair; used by the parser and CLI overrides.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// 64-bit FNV-1a hash, hex encoded.
std::string config_hash(const std::string& text);

PhaseGrid build_grid(const RunConfig& cfg);
PhaseGrid make_grid(const Axis& x, const Axis& y, const Axis& u, const Axis& w);
/// Symmetric boxes x, y in [-x_half, x_half], u, w in [-v_half, v_half], n per axis.
PhaseGrid make_square_grid(double x_half, double v_half, int n);

/// rho_ij = sum_kl f_ijkl h_u h_w.
DensityField marginal_density(const DistributionField& f);
/// Cell-sum quadrature; summation runs in storage order.
double total_mass(const DistributionField& f);

}  // namespace swarmkin
