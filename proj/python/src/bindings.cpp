// Python bindings. Fields cross the boundary as numpy copies; the grid
// travels alongside as axis tuples.
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "swarmkin/analysis.hpp"
#include "swarmkin/core.hpp"
#include "swarmkin/driver.hpp"
#include "swarmkin/fvm.hpp"
#include "swarmkin/io.hpp"
#include "swarmkin/particles.hpp"
#include "swarmkin/potentials.hpp"

namespace py = pybind11;
using namespace swarmkin;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  Array out(shape);
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

Array values_of(const DistributionField& f) {
  const auto& g = f.grid;
  return to_numpy(f.values, {g.nx(), g.ny(), g.nu(), g.nw()});
}

Array values_of(const DensityField& rho) { return to_numpy(rho.values, {rho.x.n, rho.y.n}); }

Array values_of(const VelocityField& v) { return to_numpy(v.values, {v.u.n, v.w.n}); }

void fill(std::vector<double>& dst, const Array& src) {
  if (std::size_t(src.size()) != dst.size())
    throw ConfigError("array has " + std::to_string(src.size()) + " values, grid needs " +
                      std::to_string(dst.size()));
  std::memcpy(dst.data(), src.data(), dst.size() * sizeof(double));
}

Array points(const ParticleEnsemble& e, bool velocities) {
  Array out({py::ssize_t(e.size()), py::ssize_t(2)});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < e.size(); ++i) {
    const Vec2 p = velocities ? e.v[i] : e.x[i];
    m(i, 0) = p.x;
    m(i, 1) = p.y;
  }
  return out;
}

ParticleEnsemble ensemble_from(const Array& x, const Array& v) {
  if (x.ndim() != 2 || x.shape(1) != 2 || v.ndim() != 2 || v.shape(1) != 2 ||
      x.shape(0) != v.shape(0))
    throw ConfigError("positions and velocities must both be (N, 2)");
  ParticleEnsemble e;
  auto px = x.unchecked<2>();
  auto pv = v.unchecked<2>();
  for (py::ssize_t i = 0; i < x.shape(0); ++i) {
    e.x.push_back({px(i, 0), px(i, 1)});
    e.v.push_back({pv(i, 0), pv(i, 1)});
  }
  return e;
}

}  // namespace

PYBIND11_MODULE(_swarmkin, m) {
  m.doc() = "Kinetic and particle solvers for self-propelled swarms";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

  py::class_<Roosting>(m, "Roosting")
      .def(py::init<>())
      .def_readwrite("b", &Roosting::b)
      .def_readwrite("radius", &Roosting::radius);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("alpha", &ModelParams::alpha)
      .def_readwrite("beta", &ModelParams::beta)
      .def_readwrite("c_a", &ModelParams::c_a)
      .def_readwrite("c_r", &ModelParams::c_r)
      .def_readwrite("l_a", &ModelParams::l_a)
      .def_readwrite("l_r", &ModelParams::l_r)
      .def_readwrite("noise_a", &ModelParams::noise_a)
      .def_readwrite("roosting", &ModelParams::roosting)
      .def("cruise_speed", &ModelParams::cruise_speed)
      .def("validate", &ModelParams::validate);

  py::class_<Axis>(m, "Axis")
      .def(py::init([](double lo, double hi, int n, bool cell_centered) {
             return Axis{lo, hi, n, cell_centered};
           }),
           py::arg("lo"), py::arg("hi"), py::arg("n"), py::arg("cell_centered") = false)
      .def_readwrite("lo", &Axis::lo)
      .def_readwrite("hi", &Axis::hi)
      .def_readwrite("n", &Axis::n)
      .def_readwrite("cell_centered", &Axis::cell_centered)
      .def("spacing", &Axis::spacing)
      .def("points", [](const Axis& a) {
        std::vector<double> p(a.n);
        for (int i = 0; i < a.n; ++i) p[i] = a.point(i);
        return to_numpy(p, {a.n});
      });

  py::class_<PhaseGrid>(m, "PhaseGrid")
      .def_readonly("x", &PhaseGrid::x)
      .def_readonly("y", &PhaseGrid::y)
      .def_readonly("u", &PhaseGrid::u)
      .def_readonly("w", &PhaseGrid::w)
      .def_property_readonly("shape",
                             [](const PhaseGrid& g) {
                               return py::make_tuple(g.nx(), g.ny(), g.nu(), g.nw());
                             })
      .def("cell_volume", &PhaseGrid::cell_volume);
  m.def("make_grid", &make_grid, py::arg("x"), py::arg("y"), py::arg("u"), py::arg("w"));
  m.def("make_square_grid", &make_square_grid, py::arg("x_half"), py::arg("v_half"),
        py::arg("n"));

  py::enum_<InitialCondition>(m, "InitialCondition")
      .value("single_mill", InitialCondition::single_mill)
      .value("double_mill", InitialCondition::double_mill)
      .value("large_a", InitialCondition::large_a);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("params", &RunConfig::params)
      .def_readwrite("ic", &RunConfig::ic)
      .def_readwrite("cfl", &RunConfig::cfl)
      .def_readwrite("tol_stat", &RunConfig::tol_stat)
      .def_readwrite("t_max", &RunConfig::t_max)
      .def_readwrite("max_steps", &RunConfig::max_steps)
      .def_readwrite("history_every", &RunConfig::history_every)
      .def_readwrite("eps_supp", &RunConfig::eps_supp)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readonly("source", &RunConfig::source)
      .def("set", &apply_config_value, py::arg("key"), py::arg("value"),
           "Apply one `key = value` entry.")
      .def("grid", &build_grid);
  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("config_hash", &config_hash, py::arg("text"));

  py::class_<DistributionField>(m, "DistributionField")
      .def(py::init<const PhaseGrid&>())
      .def(py::init([](const PhaseGrid& g, const Array& values) {
        DistributionField f(g);
        fill(f.values, values);
        return f;
      }))
      .def_readonly("grid", &DistributionField::grid)
      .def_property(
          "values", [](const DistributionField& f) { return values_of(f); },
          [](DistributionField& f, const Array& a) { fill(f.values, a); })
      .def("mass", &total_mass)
      .def("density", [](const DistributionField& f) { return values_of(marginal_density(f)); });

  m.def("initial_condition", &initial_condition, py::arg("grid"), py::arg("params"),
        py::arg("ic"));
  m.def("load_field", &load_field, py::arg("path"));
  m.def("dump_field", &dump_field, py::arg("field"), py::arg("path"), py::arg("meta") = "");

  py::enum_<StopReason>(m, "StopReason")
      .value("stationary", StopReason::stationary)
      .value("t_max", StopReason::t_max)
      .value("max_steps", StopReason::max_steps);

  m.def(
      "run_to_stationary",
      [](const DistributionField& f0, const RunConfig& cfg) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_to_stationary(f0, cfg);
        }
        py::list history;
        for (const auto& d : r.state.history) {
          py::dict row;
          row["step"] = d.step;
          row["t"] = d.t;
          row["tau"] = d.tau;
          row["mass"] = d.mass;
          row["mill_distance"] = d.mill_distance;
          row["change_rate"] = d.change_rate;
          history.append(row);
        }
        py::dict out;
        out["field"] = std::move(r.state.f);
        out["t"] = r.state.t;
        out["steps"] = r.state.step;
        out["reason"] = r.reason;
        out["history"] = history;
        return out;
      },
      py::arg("f0"), py::arg("config"));

  m.def("mill_distance",
        [](const DistributionField& f, const ModelParams& p, double eps_supp, bool normalized) {
          return mill_distance(f, p, {eps_supp, normalized});
        },
        py::arg("field"), py::arg("params"), py::arg("eps_supp") = 1e-3,
        py::arg("normalized") = false);
  m.def("equilibrium_peak_speed", &equilibrium_peak_speed, py::arg("params"));
  m.def("homogeneous_equilibrium",
        [](const ModelParams& p, const PhaseGrid& g) {
          return values_of(homogeneous_equilibrium(p, g));
        },
        py::arg("params"), py::arg("grid"));
  m.def(
      "solve_homogeneous",
      [](const ModelParams& p, const Axis& u, const Axis& w) {
        const HomogeneousResult r = solve_homogeneous(p, u, w);
        py::dict out;
        out["f"] = values_of(r.f);
        out["f_eq"] = values_of(r.f_eq);
        out["l2_error"] = r.l2_error;
        out["peak_speed"] = r.peak_speed;
        out["steps"] = r.steps;
        out["t"] = r.t;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("params"), py::arg("u"), py::arg("w"));
  m.def(
      "large_a_density",
      [](const Axis& x, const Axis& y, const ModelParams& p) {
        return values_of(large_a_density(x, y, p).rho);
      },
      py::arg("x"), py::arg("y"), py::arg("params"));
  m.def(
      "fit_order",
      [](const std::vector<double>& h, const std::vector<double>& e) { return fit_order(h, e); },
      py::arg("h"), py::arg("err"));

  m.def("morse", &morse, py::arg("r"), py::arg("params"));
  m.def("van_leer", &van_leer, py::arg("theta"));

  py::class_<ParticleEnsemble>(m, "ParticleEnsemble")
      .def(py::init(&ensemble_from), py::arg("x"), py::arg("v"))
      .def_property_readonly("x", [](const ParticleEnsemble& e) { return points(e, false); })
      .def_property_readonly("v", [](const ParticleEnsemble& e) { return points(e, true); })
      .def("__len__", &ParticleEnsemble::size);
  m.def("sample_ensemble", &sample_ensemble, py::arg("n"), py::arg("ic"), py::arg("params"),
        py::arg("seed"));
  m.def(
      "pairwise_force",
      [](const ParticleEnsemble& e, const ModelParams& p) {
        const auto g = pairwise_force(e, p);
        ParticleEnsemble tmp;
        tmp.x = g;
        return points(tmp, false);
      },
      py::arg("ensemble"), py::arg("params"));
  m.def(
      "run_particles",
      [](ParticleEnsemble& e, double tau, double t_max, const ModelParams& p,
         std::uint64_t seed) {
        py::gil_scoped_release release;
        run_particles(e, tau, t_max, p, seed);
      },
      py::arg("ensemble"), py::arg("tau"), py::arg("t_max"), py::arg("params"),
      py::arg("seed"));
  m.def(
      "histogram",
      [](const ParticleEnsemble& e, const PhaseGrid& g) { return histogram_4d(e, g).f; },
      py::arg("ensemble"), py::arg("grid"));
}
