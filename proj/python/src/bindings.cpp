#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "loopaction/errors.hpp"
#include "loopaction/minimizer.hpp"
#include "loopaction/oracles.hpp"
#include "loopaction/report.hpp"
#include "loopaction/verify.hpp"

namespace py = pybind11;
using namespace loopaction;

namespace {

template <typename Loop>
void bind_result(py::module_& m, const char* name) {
    using R = MinimizeResult<Loop>;
    py::class_<R>(m, name)
        .def_readonly("final_loop", &R::final_loop)
        .def_readonly("action", &R::action)
        .def_readonly("period", &R::period)
        .def_readonly("gradient_norm", &R::gradient_norm)
        .def_readonly("iterations", &R::iterations)
        .def_readonly("status", &R::status)
        .def_readonly("min_separation", &R::min_separation)
        .def_readonly("windings", &R::windings)
        .def_readonly("factor_kinetic", &R::factor_kinetic)
        .def_readonly("factor_potential", &R::factor_potential)
        .def_readonly("action_history", &R::action_history)
        .def_readonly("grid_size", &R::grid_size);
}

std::vector<Vec2> body_column(const std::vector<std::vector<Vec2>>& rows, std::size_t body) {
    std::vector<Vec2> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(body));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fixed-energy action minimization for the planar two- and three-body problems.";

    auto base = py::register_exception<Error>(m, "LoopactionError", PyExc_RuntimeError);
    py::register_exception<NearCollision>(m, "NearCollision", base);
    py::register_exception<NonIntegerWinding>(m, "NonIntegerWinding", base);
    py::register_exception<InvalidWinding>(m, "InvalidWinding", base);
    py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base);
    py::register_exception<CollisionEncountered>(m, "CollisionEncountered", base);
    py::register_exception<InvalidEnergy>(m, "InvalidEnergy", base);
    py::register_exception<OffManifold>(m, "OffManifold", base);
    py::register_exception<BadStart>(m, "BadStart", base);
    py::register_exception<DegenerateLoop>(m, "DegenerateLoop", base);
    py::register_exception<NoConvergence>(m, "NoConvergence", base);
    py::register_exception<NoReturn>(m, "NoReturn", base);
    py::register_exception<MomentumNotZero>(m, "MomentumNotZero", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<IoError>(m, "IoError", base);

    py::class_<Vec2>(m, "Vec2")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return Vec2{x, y}; }), py::arg("x"), py::arg("y"))
        .def(py::init([](const py::tuple& t) {
            if (t.size() != 2) throw py::value_error("Vec2 needs exactly two components");
            return Vec2{t[0].cast<double>(), t[1].cast<double>()};
        }))
        .def_readwrite("x", &Vec2::x)
        .def_readwrite("y", &Vec2::y)
        .def("__iter__", [](const Vec2& v) { return py::iter(py::make_tuple(v.x, v.y)); })
        .def("__eq__", [](const Vec2& a, const Vec2& b) { return a == b; })
        .def("__repr__", [](const Vec2& v) {
            std::ostringstream s;
            s << "Vec2(" << v.x << ", " << v.y << ")";
            return s.str();
        });
    py::implicitly_convertible<py::tuple, Vec2>();

    py::class_<QuadratureGrid>(m, "QuadratureGrid")
        .def(py::init<int>(), py::arg("sample_count") = 512)
        .def_property_readonly("size", &QuadratureGrid::size)
        .def("resolves", &QuadratureGrid::resolves)
        .def("refined", &QuadratureGrid::refined);

    py::class_<FourierLoop>(m, "FourierLoop")
        .def(py::init<int>(), py::arg("modes"))
        .def_readwrite("mean", &FourierLoop::mean)
        .def_readwrite("cos_coeffs", &FourierLoop::cos_coeffs)
        .def_readwrite("sin_coeffs", &FourierLoop::sin_coeffs)
        .def_property_readonly("modes", &FourierLoop::modes)
        .def_static("circle", &FourierLoop::circle, py::arg("modes"), py::arg("radius") = 1.0, py::arg("winding") = 1)
        .def_static("constant", &FourierLoop::constant, py::arg("modes"), py::arg("point"))
        .def("flatten", &FourierLoop::flatten)
        .def_static("unflatten",
                    [](const std::vector<double>& v, int modes) { return FourierLoop::unflatten(v, modes); })
        .def("__call__", [](const FourierLoop& u, double t) { return eval(u, t); });

    py::class_<TripleLoop>(m, "TripleLoop")
        .def_readwrite("loops", &TripleLoop::loops)
        .def_readwrite("masses", &TripleLoop::masses)
        .def_property_readonly("modes", &TripleLoop::modes)
        .def("relative", &TripleLoop::relative)
        .def("flatten", &TripleLoop::flatten);

    m.def("eval", &eval, py::arg("loop"), py::arg("t"));
    m.def("deriv", &deriv, py::arg("loop"), py::arg("t"));
    m.def("kinetic_integral", py::overload_cast<const FourierLoop&>(&kinetic_integral));
    m.def("winding_number", &winding_number, py::arg("loop"), py::arg("grid"),
          py::arg("near_collision_rel") = kNearCollisionRelative);
    m.def("random_loop", &random_loop, py::arg("seed"), py::arg("modes"), py::arg("winding"), py::arg("noise"));
    m.def("random_triple", &random_triple, py::arg("seed"), py::arg("modes"), py::arg("masses"), py::arg("winding"),
          py::arg("noise"));
    m.def("com_project", &com_project, py::arg("loops"), py::arg("masses"));

    py::class_<TwoBodySystem>(m, "TwoBodySystem")
        .def(py::init<double, double>(), py::arg("coupling"), py::arg("energy"))
        .def_property_readonly("coupling", &TwoBodySystem::coupling)
        .def_property_readonly("energy", &TwoBodySystem::energy);
    py::class_<ThreeBodySystem>(m, "ThreeBodySystem")
        .def(py::init<std::array<double, 3>, double>(), py::arg("masses"), py::arg("energy"))
        .def_property_readonly("masses", &ThreeBodySystem::masses)
        .def_property_readonly("energy", &ThreeBodySystem::energy);

    py::class_<ActionValue>(m, "ActionValue")
        .def_readonly("value", &ActionValue::value)
        .def_readonly("kinetic_factor", &ActionValue::kinetic_factor)
        .def_readonly("potential_factor", &ActionValue::potential_factor);

#define LOOPACTION_BOTH(name, Loop, Sys) \
    m.def(#name, py::overload_cast<const Loop&, const Sys&, const QuadratureGrid&>(&name))
    LOOPACTION_BOTH(constraint_value, FourierLoop, TwoBodySystem);
    LOOPACTION_BOTH(constraint_value, TripleLoop, ThreeBodySystem);
    LOOPACTION_BOTH(project_to_manifold, FourierLoop, TwoBodySystem);
    LOOPACTION_BOTH(project_to_manifold, TripleLoop, ThreeBodySystem);
    LOOPACTION_BOTH(action_full, FourierLoop, TwoBodySystem);
    LOOPACTION_BOTH(action_full, TripleLoop, ThreeBodySystem);
    LOOPACTION_BOTH(action_reduced, FourierLoop, TwoBodySystem);
    LOOPACTION_BOTH(action_reduced, TripleLoop, ThreeBodySystem);
    LOOPACTION_BOTH(gradient_reduced, FourierLoop, TwoBodySystem);
    LOOPACTION_BOTH(gradient_reduced, TripleLoop, ThreeBodySystem);
    LOOPACTION_BOTH(recover_period, FourierLoop, TwoBodySystem);
    LOOPACTION_BOTH(recover_period, TripleLoop, ThreeBodySystem);
#undef LOOPACTION_BOTH

    py::enum_<MinimizeStatus>(m, "MinimizeStatus")
        .value("Converged", MinimizeStatus::Converged)
        .value("MaxIters", MinimizeStatus::MaxIters)
        .value("NearCollision", MinimizeStatus::NearCollision);

    py::class_<MinimizeOptions>(m, "MinimizeOptions")
        .def(py::init<>())
        .def_readwrite("max_iters", &MinimizeOptions::max_iters)
        .def_readwrite("grad_tol", &MinimizeOptions::grad_tol)
        .def_readwrite("step_init", &MinimizeOptions::step_init)
        .def_readwrite("armijo_c", &MinimizeOptions::armijo_c)
        .def_readwrite("backtrack_factor", &MinimizeOptions::backtrack_factor)
        .def_readwrite("collision_floor", &MinimizeOptions::collision_floor)
        .def_readwrite("stall_tol", &MinimizeOptions::stall_tol)
        .def_readwrite("stall_window", &MinimizeOptions::stall_window)
        .def_readwrite("max_grid", &MinimizeOptions::max_grid);

    bind_result<FourierLoop>(m, "TwoBodyResult");
    bind_result<TripleLoop>(m, "ThreeBodyResult");
    m.def("minimize",
          py::overload_cast<const FourierLoop&, const TwoBodySystem&, const QuadratureGrid&, const MinimizeOptions&>(
              &minimize),
          py::arg("start"), py::arg("system"), py::arg("grid"), py::arg("options") = MinimizeOptions{},
          py::call_guard<py::gil_scoped_release>());
    m.def("minimize",
          py::overload_cast<const TripleLoop&, const ThreeBodySystem&, const QuadratureGrid&, const MinimizeOptions&>(
              &minimize),
          py::arg("start"), py::arg("system"), py::arg("grid"), py::arg("options") = MinimizeOptions{},
          py::call_guard<py::gil_scoped_release>());

    py::enum_<OrbitSource>(m, "OrbitSource")
        .value("Minimizer", OrbitSource::Minimizer)
        .value("KeplerOracle", OrbitSource::KeplerOracle)
        .value("LagrangeOracle", OrbitSource::LagrangeOracle)
        .value("Integrator", OrbitSource::Integrator);

    py::class_<PhysicalOrbit>(m, "PhysicalOrbit")
        .def_readonly("period", &PhysicalOrbit::period)
        .def_readonly("times", &PhysicalOrbit::times)
        .def_readonly("positions", &PhysicalOrbit::positions)
        .def_readonly("velocities", &PhysicalOrbit::velocities)
        .def_readonly("energy", &PhysicalOrbit::energy)
        .def_readonly("source", &PhysicalOrbit::source)
        .def_readonly("masses", &PhysicalOrbit::masses)
        .def("body", [](const PhysicalOrbit& o, std::size_t i) { return body_column(o.positions, i); });
    m.def("to_physical",
          py::overload_cast<const FourierLoop&, double, const TwoBodySystem&, std::size_t>(&to_physical),
          py::arg("loop"), py::arg("period"), py::arg("system"), py::arg("samples") = 256);
    m.def("to_physical",
          py::overload_cast<const TripleLoop&, double, const ThreeBodySystem&, std::size_t>(&to_physical),
          py::arg("loop"), py::arg("period"), py::arg("system"), py::arg("samples") = 256);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("positions", &Trajectory::positions)
        .def_readonly("velocities", &Trajectory::velocities)
        .def_readonly("energies", &Trajectory::energies)
        .def_readonly("max_energy_drift", &Trajectory::max_energy_drift);

    py::class_<KeplerElements>(m, "KeplerElements")
        .def(py::init<double, double, double>(), py::arg("coupling"), py::arg("energy"), py::arg("eccentricity"))
        .def_property_readonly("semi_major_axis", &KeplerElements::semi_major_axis);
    py::class_<LagrangeShape>(m, "LagrangeShape")
        .def_readonly("masses", &LagrangeShape::masses)
        .def_readonly("vertices", &LagrangeShape::vertices);
    py::class_<LagrangePeriods>(m, "LagrangePeriods")
        .def_readonly("claimed_period", &LagrangePeriods::claimed_period)
        .def_readonly("claimed_period_mass", &LagrangePeriods::claimed_period_mass)
        .def_readonly("derived", &LagrangePeriods::derived);
    py::class_<LagrangeActions>(m, "LagrangeActions")
        .def_readonly("claimed_action", &LagrangeActions::claimed_action)
        .def_readonly("derived_lagrange", &LagrangeActions::derived_lagrange);

    m.def("kepler_period", &kepler_period, py::arg("coupling"), py::arg("energy"));
    m.def("gordon_min_action", &gordon_min_action, py::arg("coupling"), py::arg("period"));
    m.def("claimed_action_2body", &claimed_action_2body, py::arg("coupling"), py::arg("energy"));
    m.def("solve_kepler_equation", &solve_kepler_equation, py::arg("mean_anomaly"), py::arg("eccentricity"));
    m.def("kepler_orbit", &kepler_orbit, py::arg("elements"), py::arg("samples"));
    m.def("kepler_loop", &kepler_loop, py::arg("elements"), py::arg("grid"));
    m.def("kepler_loop_action", &kepler_loop_action, py::arg("coupling"), py::arg("energy"), py::arg("eccentricity"),
          py::arg("grid"));
    m.def("lagrange_shape", &lagrange_shape, py::arg("masses"));
    m.def("lagrange_solution", &lagrange_solution, py::arg("masses"), py::arg("energy"), py::arg("eccentricity"),
          py::arg("samples"));
    m.def("lagrange_loop", &lagrange_loop, py::arg("masses"), py::arg("energy"), py::arg("eccentricity"),
          py::arg("grid"));
    m.def("lagrange_period", &lagrange_period, py::arg("masses"), py::arg("energy"));
    m.def("lagrange_actions", &lagrange_actions, py::arg("masses"), py::arg("energy"), py::arg("grid"),
          py::arg("eccentricity") = 0.0);
    auto bind_integrator = [&m](auto tag) {
        using Sys = decltype(tag);
        m.def(
            "integrate_ode",
            [](const Sys& sys, const std::vector<Vec2>& q, const std::vector<Vec2>& v, double duration, int steps,
               double floor) { return integrate_ode(System(sys), q, v, duration, steps, floor); },
            py::arg("system"), py::arg("positions"), py::arg("velocities"), py::arg("duration"), py::arg("steps"),
            py::arg("collision_floor") = 1e-9, py::call_guard<py::gil_scoped_release>());
    };
    bind_integrator(TwoBodySystem(1.0, -0.5));
    bind_integrator(ThreeBodySystem({1.0, 1.0, 1.0}, -0.5));
    m.def("measure_period", &measure_period, py::arg("trajectory"), py::arg("tolerance") = 1e-6);

    py::class_<CheckReport>(m, "CheckReport")
        .def_readonly("name", &CheckReport::name)
        .def_readonly("left", &CheckReport::left)
        .def_readonly("right", &CheckReport::right)
        .def_readonly("abs_deviation", &CheckReport::abs_deviation)
        .def_readonly("rel_deviation", &CheckReport::rel_deviation)
        .def_readonly("tolerance", &CheckReport::tolerance)
        .def_readonly("passed", &CheckReport::pass)
        .def_readonly("provenance", &CheckReport::provenance);
    auto bind_identity = [&m](auto tag) {
        using Sys = decltype(tag);
        m.def(
            "action_identity",
            [](const PhysicalOrbit& orbit, const Sys& sys, double f, double tol) {
                return action_identity(orbit, System(sys), f, tol);
            },
            py::arg("orbit"), py::arg("system"), py::arg("action_value"), py::arg("tolerance") = 1e-3);
    };
    bind_identity(TwoBodySystem(1.0, -0.5));
    bind_identity(ThreeBodySystem({1.0, 1.0, 1.0}, -0.5));
    m.def(
        "kinetic_identity",
        [](const std::array<Vec2, 3>& v, const std::array<double, 3>& masses, double tol) {
            return kinetic_identity(std::span<const Vec2, 3>(v), masses, tol);
        },
        py::arg("velocities"), py::arg("masses"), py::arg("tolerance") = 1e-12);
    m.def("ode_residual",
          py::overload_cast<const FourierLoop&, double, const TwoBodySystem&, const QuadratureGrid&>(&ode_residual));
    m.def("ode_residual",
          py::overload_cast<const TripleLoop&, double, const ThreeBodySystem&, const QuadratureGrid&>(&ode_residual));
    m.def("equilateral_deviation", &equilateral_deviation, py::arg("orbit"));

    py::enum_<ProblemKind>(m, "ProblemKind")
        .value("TwoBody", ProblemKind::TwoBody)
        .value("ThreeBody", ProblemKind::ThreeBody);

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def(py::init([](const py::kwargs& kwargs) {
            RunConfig c;
            for (const auto& [key, value] : kwargs) {
                std::string text;
                if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
                    for (const auto& item : value) {
                        if (!text.empty()) text += ',';
                        text += py::str(item).cast<std::string>();
                    }
                } else if (py::isinstance<py::bool_>(value)) {
                    text = value.cast<bool>() ? "true" : "false";
                } else {
                    text = py::str(value).cast<std::string>();
                }
                apply_setting(c, py::str(key).cast<std::string>(), text);
            }
            return c;
        }))
        .def_readwrite("problem", &RunConfig::problem)
        .def_readwrite("a", &RunConfig::a)
        .def_readwrite("h", &RunConfig::h)
        .def_readwrite("masses", &RunConfig::masses)
        .def_readwrite("E", &RunConfig::E)
        .def_readwrite("modes", &RunConfig::modes)
        .def_readwrite("grid", &RunConfig::grid)
        .def_readwrite("seeds", &RunConfig::seeds)
        .def_readwrite("winding", &RunConfig::winding)
        .def_readwrite("noise", &RunConfig::noise)
        .def_readwrite("eccentricity", &RunConfig::eccentricity)
        .def_readwrite("minimize", &RunConfig::minimize)
        .def_readwrite("out_dir", &RunConfig::out_dir)
        .def_readwrite("emit_plots", &RunConfig::emit_plots)
        .def_readwrite("sweep", &RunConfig::sweep)
        .def_readwrite("jobs", &RunConfig::jobs)
        .def("set", [](RunConfig& c, const std::string& key, const std::string& value) { apply_setting(c, key, value); })
        .def("validate", &RunConfig::validate);

    py::class_<FormulaRow>(m, "FormulaRow")
        .def_readonly("quantity", &FormulaRow::quantity)
        .def_readonly("label", &FormulaRow::label)
        .def_readonly("source", &FormulaRow::source)
        .def_readonly("value", &FormulaRow::value)
        .def_readonly("reference", &FormulaRow::reference)
        .def_readonly("rel_gap", &FormulaRow::rel_gap)
        .def_readonly("matches_reference", &FormulaRow::matches_reference);

    m.def("formula_table", &formula_table, py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def("verification_suite", &verification_suite, py::arg("config"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "run",
        [](const RunConfig& c) {
            std::ostringstream log;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run(c, log);
            }
            return py::make_tuple(code, log.str());
        },
        py::arg("config"), "Executes and writes all runs; returns (exit_code, log).");
}
