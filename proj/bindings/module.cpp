// Python bindings for the main operations: problem construction, a-priori
// calculators, path simulation, the backward solver, reference oracles and
// the radius schedules.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bsdelab/apriori.hpp"
#include "bsdelab/harness.hpp"
#include "bsdelab/oracle.hpp"
#include "bsdelab/problem_io.hpp"

namespace py = pybind11;
using namespace bsdelab;

namespace {

ProblemSpec problem_from_json_str(const std::string& text) {
    return problem_from_json(nlohmann::json::parse(text));
}

py::dict solve_summary(const ProblemSpec& spec, int n, std::size_t P, double M,
                       const std::string& estimator, std::uint64_t seed,
                       const std::string& variant, int threads) {
    const auto est = EstimatorSpec::parse(estimator);
    const auto var = variant == "random-sigma" ? TruncationVariant::RandomSigma
                                               : TruncationVariant::DeterministicSigma;
    const auto truncated = truncate_problem(spec, M, var);
    auto ens = std::make_shared<PathEnsemble>(euler_paths(spec, n, P, seed, threads));
    const auto sol = solve_backward(truncated, ens, est, threads);

    double z0 = 0.0;
    for (std::size_t p = 0; p < sol.P; ++p) z0 += sol.z_at(p, 0)[0];
    z0 /= static_cast<double>(sol.P);

    py::array_t<double> Y({sol.P, static_cast<std::size_t>(sol.n) + 1});
    py::array_t<double> Z(
        {sol.P, static_cast<std::size_t>(sol.n), static_cast<std::size_t>(sol.d)});
    std::copy(sol.Y.begin(), sol.Y.end(), Y.mutable_data());
    std::copy(sol.Z.begin(), sol.Z.end(), Z.mutable_data());

    py::dict out;
    out["Y0_mean"] = sol.y0_mean;
    out["Y0_stderr"] = sol.y0_stderr;
    out["Z0_mean"] = z0;
    out["Y"] = Y;
    out["Z"] = Z;
    return out;
}

py::array_t<double> paths_array(const ProblemSpec& spec, int n, std::size_t P,
                                std::uint64_t seed, int threads) {
    const auto ens = euler_paths(spec, n, P, seed, threads);
    py::array_t<double> out(
        {P, static_cast<std::size_t>(n) + 1, static_cast<std::size_t>(ens.d)});
    std::copy(ens.states.begin(), ens.states.end(), out.mutable_data());
    return out;
}

py::array_t<double> truncate_array(py::array_t<double, py::array::c_style> x, double M) {
    if (x.ndim() != 1) throw SpecError("expected a 1-d vector");
    TruncationSpec tr(M);
    py::array_t<double> out(std::vector<py::ssize_t>{x.shape(0)});
    tr.apply({x.data(), static_cast<std::size_t>(x.shape(0))},
             {out.mutable_data(), static_cast<std::size_t>(x.shape(0))});
    return out;
}

} // namespace

PYBIND11_MODULE(_bsdelab, m) {
    m.doc() = "Monte Carlo solver laboratory for Markovian quadratic and superquadratic "
              "backward stochastic differential equations";

    py::register_exception<SpecError>(m, "SpecError");
    py::register_exception<NumericalError>(m, "NumericalError");

    py::class_<RegularityParams>(m, "RegularityParams")
        .def(py::init<>())
        .def_readwrite("l", &RegularityParams::l)
        .def_readwrite("r", &RegularityParams::r)
        .def_readwrite("alpha", &RegularityParams::alpha)
        .def_readwrite("beta", &RegularityParams::beta)
        .def_readwrite("gamma", &RegularityParams::gamma)
        .def_readwrite("K_b", &RegularityParams::K_b)
        .def_readwrite("K_f_y", &RegularityParams::K_f_y)
        .def_readwrite("K_f_x", &RegularityParams::K_f_x)
        .def_readwrite("K_f_z", &RegularityParams::K_f_z)
        .def_readwrite("K_g", &RegularityParams::K_g)
        .def_readwrite("sigma_sup", &RegularityParams::sigma_sup)
        .def_readwrite("kappa", &RegularityParams::kappa)
        .def_readwrite("M_sigma", &RegularityParams::M_sigma)
        .def_readwrite("K_sigma", &RegularityParams::K_sigma)
        .def_readwrite("M_f", &RegularityParams::M_f)
        .def_readwrite("M_g", &RegularityParams::M_g)
        .def_readwrite("T", &RegularityParams::T)
        .def_readwrite("envelope_C", &RegularityParams::envelope_C);

    py::class_<ProblemSpec>(m, "ProblemSpec")
        .def_property_readonly("d", [](const ProblemSpec& p) { return p.d; })
        .def_property_readonly("T", [](const ProblemSpec& p) { return p.T; })
        .def_property_readonly("x0", [](const ProblemSpec& p) { return p.x0; })
        .def_property_readonly("catalog", [](const ProblemSpec& p) { return p.catalog_tag; })
        .def_readwrite("params", &ProblemSpec::params)
        .def("to_json", [](const ProblemSpec& p) { return problem_to_json(p).dump(2); });

    m.def("load_problem",
          [](const std::string& path) { return load_problem(path); },
          py::arg("path"));
    m.def("problem_from_json", &problem_from_json_str, py::arg("text"));
    m.def("quadratic_sine", &catalog::quadratic_sine, py::arg("s") = 1.0, py::arg("T") = 1.0,
          py::arg("x0") = 0.0, py::arg("a") = 1.0);
    m.def("linear_terminal", &catalog::linear_terminal, py::arg("theta") = 1.0,
          py::arg("s") = 1.0, py::arg("T") = 1.0, py::arg("x0") = 0.0,
          py::arg("declared_alpha") = 0.3);
    m.def("bounded_sine", &catalog::bounded_sine, py::arg("a") = 1.0, py::arg("omega") = 2.0,
          py::arg("s") = 1.0, py::arg("T") = 1.0, py::arg("x0") = 0.0);
    m.def("superquadratic_sine", &catalog::superquadratic_sine, py::arg("gamma") = 0.5,
          py::arg("l") = 2.0, py::arg("s") = 1.0, py::arg("T") = 1.0, py::arg("x0") = 0.0,
          py::arg("a") = 1.0, py::arg("omega") = 1.0);

    m.def("smooth_truncation", &truncate_array, py::arg("x"), py::arg("M"),
          "smooth radial truncation onto the ball of radius M");

    m.def(
        "check_b1_threshold",
        [](const RegularityParams& p) {
            const auto th = check_b1_threshold(p);
            py::dict d;
            d["threshold"] = th.threshold;
            d["lhs"] = th.lhs;
            d["satisfied"] = th.satisfied;
            d["margin"] = th.margin;
            return d;
        },
        py::arg("params"));
    m.def("lipschitz_z_bound", &lipschitz_z_bound, py::arg("params"));
    m.def(
        "critical_envelope",
        [](const RegularityParams& p, double t, double tol) {
            const auto env = b1_envelope(p, t, tol);
            py::dict d;
            d["A"] = env.A;
            d["B"] = env.B;
            d["exponent"] = env.exponent;
            d["converged"] = env.converged;
            d["iterations"] = env.iterations;
            d["C1"] = env.C1;
            d["C2"] = env.C2;
            return d;
        },
        py::arg("params"), py::arg("t") = 0.0, py::arg("tol") = 1e-10);
    m.def(
        "subcritical_limit",
        [](const RegularityParams& p, double A0, double tol) {
            const auto lim = b2_recursion_limit(p, A0, tol);
            return py::make_tuple(lim.A_inf, lim.iterations);
        },
        py::arg("params"), py::arg("A0") = 0.0, py::arg("tol") = 1e-10);
    m.def(
        "small_time_radius",
        [](const RegularityParams& p, const std::function<double(double)>& phi,
           double C) -> py::object {
            const auto r = small_time_radius(p, phi, C);
            if (!r) return py::none();
            return py::float_(*r);
        },
        py::arg("params"), py::arg("phi"), py::arg("C") = 1.0);

    m.def("euler_paths", &paths_array, py::arg("problem"), py::arg("n"), py::arg("P"),
          py::arg("seed"), py::arg("threads") = 1,
          "dense Euler path array of shape (P, n+1, d)");

    m.def("solve", &solve_summary, py::arg("problem"), py::arg("n"), py::arg("P"),
          py::arg("M"), py::arg("estimator") = "global:3", py::arg("seed") = 1,
          py::arg("variant") = "deterministic-sigma", py::arg("threads") = 1,
          "backward dynamic-programming run; returns Y0 stats and the value/control arrays");

    m.def(
        "cole_hopf_y",
        [](const ProblemSpec& spec, std::size_t samples, std::uint64_t seed, int n_inner,
           int threads) {
            const auto r = cole_hopf_y(spec, 0.0, spec.x0, samples, seed, n_inner, threads);
            return py::make_tuple(r.y, r.stderr);
        },
        py::arg("problem"), py::arg("samples"), py::arg("seed") = 1, py::arg("n_inner") = 256,
        py::arg("threads") = 1);

    m.def(
        "closed_form_linear",
        [](std::vector<double> theta, double s, double T, std::vector<double> x, double t) {
            double y = 0.0;
            std::vector<double> z(theta.size());
            closed_form_linear(theta, s, T, x, t, y, z);
            return py::make_tuple(y, z);
        },
        py::arg("theta"), py::arg("s"), py::arg("T"), py::arg("x"), py::arg("t"));

    m.def(
        "select_M",
        [](double n, const RegularityParams& p, const std::string& rule, double p_exp,
           double c_ratio) { return select_M(n, p, m_rule_from_name(rule), p_exp, c_ratio); },
        py::arg("n"), py::arg("params"), py::arg("rule"), py::arg("p_exp") = 2.0,
        py::arg("c_ratio") = 1.0);
}
