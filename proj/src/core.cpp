#include "swarmkin/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace swarmkin {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto s = trim(v);
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

std::pair<double, double> to_pair(const std::string& key, const std::string& v) {
  auto comma = v.find(',');
  if (comma == std::string::npos)
    throw ConfigError("config key '" + key + "': expected 'lo, hi', got '" + v + "'");
  return {to_double(key, v.substr(0, comma)), to_double(key, v.substr(comma + 1))};
}

void check_axis(const char* name, const Axis& a) {
  if (a.n < 4)
    throw ConfigError(std::string("axis ") + name + ": need at least 4 points, got " +
                      std::to_string(a.n));
  if (!(a.lo < a.hi))
    throw ConfigError(std::string("axis ") + name + ": bounds must satisfy lo < hi");
}

}  // namespace

void ModelParams::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(l_a > 0.0) || !(l_r > 0.0)) throw ConfigError("interaction lengths must be positive");
  if (!(noise_a >= 0.0)) throw ConfigError("noise amplitude must be non-negative");
  if (roosting && !(roosting->radius > 0.0)) throw ConfigError("roosting radius must be positive");
  if (!std::isfinite(cruise_speed())) throw ConfigError("cruise speed is not finite");
}

double DensityField::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_area();
}

std::string to_string(InitialCondition ic) {
  switch (ic) {
    case InitialCondition::single_mill: return "single";
    case InitialCondition::double_mill: return "double";
    case InitialCondition::large_a: return "large_a";
  }
  return "?";
}

std::string to_string(ReferenceKind r) {
  return r == ReferenceKind::fixed_point ? "fixed_point" : "self";
}

InitialCondition parse_initial_condition(const std::string& name) {
  if (name == "single" || name == "single_mill") return InitialCondition::single_mill;
  if (name == "double" || name == "double_mill") return InitialCondition::double_mill;
  if (name == "large_a") return InitialCondition::large_a;
  throw ConfigError("unknown initial condition '" + name + "'");
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto& p = cfg.params;
  auto set_bounds = [&](Axis& a) {
    auto [lo, hi] = to_pair(key, value);
    a.lo = lo;
    a.hi = hi;
  };
  auto roost = [&]() -> Roosting& {
    if (!p.roosting) p.roosting = Roosting{};
    return *p.roosting;
  };

  if (key == "x_bounds") set_bounds(cfg.x);
  else if (key == "y_bounds") set_bounds(cfg.y);
  else if (key == "u_bounds") set_bounds(cfg.u);
  else if (key == "w_bounds") set_bounds(cfg.w);
  else if (key == "space_bounds") { set_bounds(cfg.x); set_bounds(cfg.y); }
  else if (key == "velocity_bounds") { set_bounds(cfg.u); set_bounds(cfg.w); }
  else if (key == "n_x") cfg.x.n = int(to_long(key, value));
  else if (key == "n_y") cfg.y.n = int(to_long(key, value));
  else if (key == "n_u") cfg.u.n = int(to_long(key, value));
  else if (key == "n_w") cfg.w.n = int(to_long(key, value));
  else if (key == "n") cfg.x.n = cfg.y.n = cfg.u.n = cfg.w.n = int(to_long(key, value));
  else if (key == "alpha") p.alpha = to_double(key, value);
  else if (key == "beta") p.beta = to_double(key, value);
  else if (key == "c_a") p.c_a = to_double(key, value);
  else if (key == "c_r") p.c_r = to_double(key, value);
  else if (key == "l_a") p.l_a = to_double(key, value);
  else if (key == "l_r") p.l_r = to_double(key, value);
  else if (key == "noise_a" || key == "a") p.noise_a = to_double(key, value);
  else if (key == "roosting_b") roost().b = to_double(key, value);
  else if (key == "roosting_r") roost().radius = to_double(key, value);
  else if (key == "cfl") cfg.cfl = to_double(key, value);
  else if (key == "tau") cfg.fixed_tau = to_double(key, value);
  else if (key == "cg_tol") cfg.cg_tol = to_double(key, value);
  else if (key == "cg_max_iter") cfg.cg_max_iter = int(to_long(key, value));
  else if (key == "ic") cfg.ic = parse_initial_condition(trim(value));
  else if (key == "tol_stat") cfg.tol_stat = to_double(key, value);
  else if (key == "t_max") cfg.t_max = to_double(key, value);
  else if (key == "max_steps") cfg.max_steps = to_long(key, value);
  else if (key == "history_every") cfg.history_every = int(to_long(key, value));
  else if (key == "eps_supp") cfg.eps_supp = to_double(key, value);
  else if (key == "n_particles") cfg.n_particles = int(to_long(key, value));
  else if (key == "seed") cfg.seed = std::uint64_t(to_long(key, value));
  else if (key == "particle_tau") cfg.particle_tau = to_double(key, value);
  else if (key == "particle_t_max") cfg.particle_t_max = to_double(key, value);
  else if (key == "output_dir") cfg.output_dir = trim(value);
  else if (key == "ladder") {
    cfg.ladder.clear();
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) cfg.ladder.push_back(int(to_long(key, item)));
    if (cfg.ladder.empty()) throw ConfigError("config key 'ladder': empty list");
  } else if (key == "reference") {
    const std::string r = trim(value);
    if (r == "fixed_point") cfg.reference = ReferenceKind::fixed_point;
    else if (r == "self") cfg.reference = ReferenceKind::self;
    else throw ConfigError("config key 'reference': expected fixed_point or self, got '" + r + "'");
  } else if (key == "n_ref") cfg.n_ref = int(to_long(key, value));
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.source = text;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    try {
      apply_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.params.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PhaseGrid make_grid(const Axis& x, const Axis& y, const Axis& u, const Axis& w) {
  PhaseGrid g{x, y, u, w};
  g.x.cell_centered = g.y.cell_centered = false;
  g.u.cell_centered = g.w.cell_centered = true;
  check_axis("x", g.x);
  check_axis("y", g.y);
  check_axis("u", g.u);
  check_axis("w", g.w);
  return g;
}

PhaseGrid build_grid(const RunConfig& cfg) { return make_grid(cfg.x, cfg.y, cfg.u, cfg.w); }

PhaseGrid make_square_grid(double x_half, double v_half, int n) {
  return make_grid({-x_half, x_half, n, false}, {-x_half, x_half, n, false},
                   {-v_half, v_half, n, true}, {-v_half, v_half, n, true});
}

DensityField marginal_density(const DistributionField& f) {
  const auto& g = f.grid;
  DensityField rho(g.x, g.y);
  const double dv = g.velocity_cell_volume();
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      double s = 0.0;
      for (double v : f.slice(i, j)) s += v;
      rho.at(i, j) = s * dv;
    }
  return rho;
}

double total_mass(const DistributionField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_volume();
}

}  // namespace swarmkin
