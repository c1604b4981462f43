#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "specel/control_hum.hpp"
#include "specel/observability.hpp"

namespace py = pybind11;
using namespace specel;

namespace {

VectorField field(const GridPtr& g, const Eigen::MatrixXd& values) {
  if (values.rows() != g->size() || values.cols() != g->dim())
    throw std::invalid_argument("expected an array of shape (grid.size, grid.dim)");
  return VectorField(g, values);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spectral collocation toolkit for linear elasticity";

  m.def("legendre_eval", [](int n, double x) {
    const auto v = legendre_eval(n, x);
    return py::make_tuple(v.value, v.derivative);
  }, py::arg("n"), py::arg("x"), "L_n(x) and L_n'(x)");

  py::class_<LglRule>(m, "LglRule")
      .def_readonly("degree", &LglRule::degree)
      .def_readonly("nodes", &LglRule::nodes)
      .def_readonly("weights", &LglRule::weights)
      .def_readonly("diff1", &LglRule::diff1)
      .def_readonly("diff2", &LglRule::diff2);
  m.def("lgl_rule", &lgl_rule, py::arg("N"));

  py::class_<TensorGrid, std::shared_ptr<TensorGrid>>(m, "TensorGrid")
      .def_property_readonly("dim", &TensorGrid::dim)
      .def_property_readonly("degree", &TensorGrid::degree)
      .def_property_readonly("size", &TensorGrid::size)
      .def_property_readonly("coordinates", &TensorGrid::coordinates)
      .def_property_readonly("weights", &TensorGrid::weights)
      .def_property_readonly("interior_indices", &TensorGrid::interior_indices)
      .def_property_readonly("boundary_indices", &TensorGrid::boundary_indices)
      .def("face_indices", &TensorGrid::face_indices, py::arg("face"))
      .def("multi_index", &TensorGrid::multi_index, py::arg("flat"));
  m.def("make_grid", [](int dim, int degree) { return std::const_pointer_cast<TensorGrid>(make_grid(dim, degree)); },
        py::arg("dim"), py::arg("degree"));

  py::class_<Material>(m, "Material")
      .def(py::init([](double lambda, double mu) {
             Material mat{lambda, mu};
             mat.validate();
             return mat;
           }),
           py::arg("lam") = 0.5, py::arg("mu") = 4.0)
      .def_readwrite("lam", &Material::lambda)
      .def_readwrite("mu", &Material::mu);

  py::enum_<Scheme>(m, "Scheme").value("Newmark", Scheme::Newmark).value("RK4", Scheme::RK4);

  py::class_<TimeGridSpec>(m, "TimeGridSpec")
      .def(py::init([](double T, double dt, Scheme s) {
             TimeGridSpec spec{T, dt, s};
             spec.validate();
             return spec;
           }),
           py::arg("T") = 3.0, py::arg("dt") = 0.01, py::arg("scheme") = Scheme::Newmark)
      .def_readonly("T", &TimeGridSpec::T)
      .def_readonly("dt", &TimeGridSpec::dt)
      .def_readonly("scheme", &TimeGridSpec::scheme)
      .def("steps", &TimeGridSpec::steps);

  py::class_<ElasticState>(m, "ElasticState")
      .def(py::init([](std::shared_ptr<TensorGrid> g, const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
             GridPtr gp = g;
             return ElasticState(field(gp, u), field(gp, v));
           }),
           py::arg("grid"), py::arg("displacement"), py::arg("velocity"))
      .def_property_readonly("displacement", [](const ElasticState& s) { return s.displacement.values; })
      .def_property_readonly("velocity", [](const ElasticState& s) { return s.velocity.values; })
      .def_readonly("time", &ElasticState::time);

  py::class_<ElasticPropagator>(m, "ElasticPropagator")
      .def(py::init([](std::shared_ptr<TensorGrid> g, Material mat, TimeGridSpec spec) {
             return ElasticPropagator(g, mat, spec);
           }),
           py::arg("grid"), py::arg("material"), py::arg("spec"))
      .def_property_readonly("dt", &ElasticPropagator::dt)
      .def_property_readonly("steps", &ElasticPropagator::steps)
      .def_property_readonly("dofs", &ElasticPropagator::dofs)
      .def("spectral_radius", &ElasticPropagator::spectral_radius)
      .def("rk4_step_limit", &ElasticPropagator::rk4_step_limit);

  m.def("discrete_energy", &discrete_energy, py::arg("state"), py::arg("material"));
  m.def(
      "energy_trace",
      [](const ElasticPropagator& p, const ElasticState& s) {
        std::vector<double> e;
        integrate_adjoint(p, s, [&](int, const ElasticState& st) { e.push_back(discrete_energy(st, p.material())); });
        return e;
      },
      py::arg("propagator"), py::arg("state"), "E^N(t_n) for n = 0..steps");

  py::class_<ObservabilityReport>(m, "ObservabilityReport")
      .def_readonly("lhs_norm_sq", &ObservabilityReport::lhs_norm_sq)
      .def_readonly("term_traction", &ObservabilityReport::term_traction)
      .def_readonly("term_second", &ObservabilityReport::term_second)
      .def_readonly("ratio", &ObservabilityReport::ratio)
      .def_readonly("threshold", &ObservabilityReport::threshold);
  m.def("observability_threshold", &observability_threshold, py::arg("dim"), py::arg("N"), py::arg("material"));
  m.def(
      "observe_trajectory", [](const ElasticPropagator& p, const ElasticState& s) { return observe_trajectory(p, s); },
      py::arg("propagator"), py::arg("state"));
  m.def(
      "worst_case_ratio",
      [](const ElasticPropagator& p, int iterations) {
        return (iterations > 0 ? worst_case_ratio(p, iterations) : worst_case_ratio_exact(p)).ratio;
      },
      py::arg("propagator"), py::arg("iterations") = 0, "Minimal observation ratio; iterations = 0 is exact");

  py::class_<ControlOptions>(m, "ControlOptions")
      .def(py::init<>())
      .def_readwrite("tol", &ControlOptions::tol)
      .def_readwrite("max_iter", &ControlOptions::max_iter)
      .def_readwrite("weight_g", &ControlOptions::weight_g)
      .def_readwrite("symmetry_tol", &ControlOptions::symmetry_tol);

  py::class_<ControlResult>(m, "ControlResult")
      .def_readonly("f_norm", &ControlResult::f_norm)
      .def_readonly("g_norm", &ControlResult::g_norm)
      .def_readonly("final_state_norm_rel", &ControlResult::final_state_norm_rel)
      .def_readonly("cg_iterations", &ControlResult::cg_iterations)
      .def_readonly("cg_residual", &ControlResult::cg_residual)
      .def_readonly("converged", &ControlResult::converged)
      .def_readonly("residual_history", &ControlResult::residual_history)
      .def_readonly("f", &ControlResult::f)
      .def_property_readonly("f_trace", [](const ControlResult& r) { return control_norms(r).f_trace; });
  m.def(
      "solve_control",
      [](const Eigen::MatrixXd& u0, const Eigen::MatrixXd& u1, const ElasticPropagator& p, const ControlOptions& o) {
        py::gil_scoped_release release;
        return solve_control(field(p.grid(), u0), field(p.grid(), u1), p, o);
      },
      py::arg("u0"), py::arg("u1"), py::arg("propagator"), py::arg("options") = ControlOptions{});
}
