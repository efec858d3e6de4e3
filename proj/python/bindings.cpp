// Python bindings: profiles, homogeneous solutions, the spectral gate, Green
// kernels, wave operators, multipliers, linear evolution and the scenario runner.
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "chd/evolve.hpp"
#include "chd/lab.hpp"
#include "chd/multipliers.hpp"
#include "chd/profiles.hpp"
#include "chd/rayleigh.hpp"
#include "chd/sturm.hpp"
#include "chd/waveop.hpp"

namespace py = pybind11;
using namespace chd;

namespace {

py::array_t<double> vec_array(const Vec& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> mat_array(const RMat& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.a.begin(), m.a.end(), out.mutable_data());
  return out;
}

py::array_t<cplx> cvec_array(const CVec& v) { return py::array_t<cplx>(v.size(), v.data()); }

CVec to_cvec(py::array_t<cplx, py::array::c_style | py::array::forcecast> a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return CVec(a.data(), a.data() + a.size());
}

Bc bc_arg(const std::string& s) { return parse_bc(s); }

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "inviscid damping laboratory for stratified channel flow";

  static py::exception<Error> chd_error(m, "ChdError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = chd_error;
      py::object inst = exc(e.what());
      inst.attr("kind") = e.kind();
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  py::class_<ProfileSpec>(m, "ProfileSpec")
      .def(py::init<>())
      .def(py::init([](const std::string& family, int n_y, double eps_u, double eps_theta) {
             ProfileSpec s;
             s.family = family;
             s.n_y = n_y;
             s.eps_u = eps_u;
             s.eps_theta = eps_theta;
             return s;
           }),
           py::arg("family"), py::arg("n_y") = 257, py::arg("eps_u") = 0.0, py::arg("eps_theta") = 0.0)
      .def_readwrite("family", &ProfileSpec::family)
      .def_readwrite("n_y", &ProfileSpec::n_y)
      .def_readwrite("kappa0", &ProfileSpec::kappa0)
      .def_readwrite("c0", &ProfileSpec::c0)
      .def_readwrite("eps_u", &ProfileSpec::eps_u)
      .def_readwrite("eps_theta", &ProfileSpec::eps_theta)
      .def_readwrite("u", &ProfileSpec::u)
      .def_readwrite("theta", &ProfileSpec::theta)
      .def("to_json", [](const ProfileSpec& s) { return profile_to_json(s); });

  py::class_<ChannelProfile>(m, "ChannelProfile")
      .def_readonly("spec", &ChannelProfile::spec)
      .def_readonly("n", &ChannelProfile::n)
      .def_readonly("h", &ChannelProfile::h)
      .def_readonly("kappa0", &ChannelProfile::kappa0)
      .def_property_readonly("y", [](const ChannelProfile& p) { return vec_array(p.y); })
      .def_property_readonly("u", [](const ChannelProfile& p) { return vec_array(p.u); })
      .def_property_readonly("du", [](const ChannelProfile& p) { return vec_array(p.du); })
      .def_property_readonly("theta", [](const ChannelProfile& p) { return vec_array(p.theta); })
      .def_property_readonly("dtheta", [](const ChannelProfile& p) { return vec_array(p.dtheta); })
      .def_property_readonly("shear_coef", [](const ChannelProfile& p) { return vec_array(p.shear_coef()); })
      .def_property_readonly("valid", [](const ChannelProfile& p) { return p.report.ok; });

  m.def("build_profile", &build_profile, py::arg("spec"));
  m.def("couette_constant", &couette_constant, py::arg("n_y") = 257);
  m.def("profile_from_json", &profile_from_json, py::arg("text"));

  m.def(
      "phi1_table",
      [](const ChannelProfile& p, int k) {
        const HomSolutionTable t = hom_table(p, k);
        return py::make_tuple(vec_array(t.yprime), mat_array(t.phi1), mat_array(t.dphi1));
      },
      py::arg("profile"), py::arg("k"), "(yprime, phi1, dphi1); row j is the solution centred at yprime[j]");
  m.def(
      "hom_bounds",
      [](const ChannelProfile& p, int k) {
        const HomBounds b = hom_bounds(p, hom_table(p, k));
        py::dict d;
        d["k"] = b.k;
        d["monotone_violations"] = b.monotone_violations;
        d["min_phi1"] = b.min_phi1;
        d["c_growth"] = b.c_growth;
        d["c_log_deriv"] = b.c_log_deriv;
        d["c_excess"] = b.c_excess;
        d["c_excess_upper"] = b.c_excess_upper;
        return d;
      },
      py::arg("profile"), py::arg("k"));
  m.def(
      "spectral_assumption_check",
      [](const ChannelProfile& p, int k_max, double eps0) {
        const StabilityReport r = spectral_assumption_check(p, k_max, eps0);
        py::list per_k;
        for (const KStability& s : r.per_k) {
          py::dict d;
          d["k"] = s.k;
          d["indicator_floor"] = s.indicator_floor;
          d["wronskian_floor"] = s.wronskian_floor;
          d["limit_mismatch"] = s.limit_mismatch;
          d["embedded_candidates"] = s.embedded_candidates;
          d["stable"] = s.stable;
          per_k.append(d);
        }
        py::dict out;
        out["verdict"] = r.verdict;
        out["floor"] = r.floor;
        out["per_k"] = per_k;
        return out;
      },
      py::arg("profile"), py::arg("k_max") = 8, py::arg("eps0") = 1e-3);

  m.def(
      "green_kernel",
      [](const ChannelProfile& p, int k, const std::string& bc) {
        const GreenKernelSet g = green_kernel(p, k, bc_arg(bc));
        py::dict d;
        d["G"] = mat_array(g.G);
        d["discrepancy"] = g.discrepancy;
        d["identity_residual"] = g.identity_residual;
        return d;
      },
      py::arg("profile"), py::arg("k"), py::arg("bc") = "dirichlet");
  m.def(
      "solve_stream",
      [](const ChannelProfile& p, int k, py::array_t<cplx> omega_tilde) {
        return cvec_array(solve_stream(p, k, to_cvec(omega_tilde)));
      },
      py::arg("profile"), py::arg("k"), py::arg("omega_tilde"));

  py::class_<WaveKernelSet>(m, "WaveKernelSet")
      .def_readonly("k", &WaveKernelSet::k)
      .def_property_readonly("D", [](const WaveKernelSet& s) { return mat_array(s.D); })
      .def_property_readonly("D1", [](const WaveKernelSet& s) { return mat_array(s.D1); })
      .def_property_readonly("Dinv", [](const WaveKernelSet& s) { return mat_array(s.Dinv); })
      .def("apply",
           [](const WaveKernelSet& s, const std::string& which, py::array_t<cplx> f) {
             return cvec_array(apply_wave(s, parse_wave_kind(which), to_cvec(f)));
           },
           py::arg("which"), py::arg("f"))
      .def("inverse_residual", [](const WaveKernelSet& s, py::array_t<cplx> f) {
        return inverse_residual(s, to_cvec(f));
      });
  m.def("build_wave_set", [](const ChannelProfile& p, int k) { return build_wave_set(p, k); }, py::arg("profile"),
        py::arg("k"));
  m.def(
      "intertwine_residual",
      [](const ChannelProfile& p, const WaveKernelSet& s, py::array_t<cplx> omega) {
        return intertwine_residual(p, s, to_cvec(omega));
      },
      py::arg("profile"), py::arg("wave_set"), py::arg("omega"));

  py::class_<MultiplierParams>(m, "MultiplierParams")
      .def(py::init<>())
      .def_readwrite("s", &MultiplierParams::s)
      .def_readwrite("sigma", &MultiplierParams::sigma)
      .def_readwrite("mu", &MultiplierParams::mu)
      .def_readwrite("lambda0", &MultiplierParams::lambda0)
      .def_readwrite("lambda_prime", &MultiplierParams::lambda_prime)
      .def_readwrite("delta_lambda", &MultiplierParams::delta_lambda)
      .def_readwrite("q", &MultiplierParams::q)
      .def("resolved", &MultiplierParams::resolved);
  m.def("critical_count", &critical_count, py::arg("eta"));
  m.def(
      "critical_times",
      [](int k, double eta) {
        const CriticalTimes c = critical_times(k, eta);
        py::dict d;
        d["t"] = c.t;
        d["lo"] = c.lo;
        d["hi"] = c.hi;
        d["empty"] = c.empty;
        return d;
      },
      py::arg("k"), py::arg("eta"));
  m.def("w_value", &w_value, py::arg("t"), py::arg("k"), py::arg("eta"), py::arg("params") = MultiplierParams{});
  m.def("junction_residual", &junction_residual, py::arg("k"), py::arg("eta"),
        py::arg("params") = MultiplierParams{});
  m.def(
      "ratio_audit",
      [](const MultiplierParams& p, int samples, uint64_t seed) {
        const RatioAudit a = ratio_audit(p, samples, seed);
        py::dict d;
        d["samples"] = a.samples;
        d["violations"] = a.violations_nr + a.violations_rate + a.violations_pair + a.violations_sqrt;
        d["c_nr_ratio"] = a.c_nr_ratio;
        d["mu_fit"] = a.mu_fit;
        d["c_rate_lo"] = a.c_rate_lo;
        d["c_rate_hi"] = a.c_rate_hi;
        return d;
      },
      py::arg("params") = MultiplierParams{}, py::arg("samples") = 10000, py::arg("seed") = 1);

  m.def(
      "evolve_linear",
      [](const ChannelProfile& p, int k, py::array_t<cplx> omega_tilde0, const Vec& times, double dt) {
        const LinearTrajectory tr = evolve_linear(p, k, to_cvec(omega_tilde0), times, dt);
        py::list psi;
        for (const CVec& v : tr.psi) psi.append(cvec_array(v));
        return psi;
      },
      py::arg("profile"), py::arg("k"), py::arg("omega_tilde0"), py::arg("times"), py::arg("dt") = 0.05,
      "psi at each requested time");
  m.def(
      "evolve_linear_spectral",
      [](const ChannelProfile& p, int k, py::array_t<cplx> omega_tilde0, const Vec& times) {
        py::list psi;
        for (const CVec& v : evolve_linear_spectral(p, k, to_cvec(omega_tilde0), times)) psi.append(cvec_array(v));
        return psi;
      },
      py::arg("profile"), py::arg("k"), py::arg("omega_tilde0"), py::arg("times"));

  m.def("scenario_names", &scenario_names);
  m.def(
      "run_scenario",
      [](const std::string& config_text) {
        const LabConfig c = parse_config_text(config_text);
        validate_config(c);
        ScenarioResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(c);
        }
        return json_to_py(summary_json(r, config_to_json(c)));
      },
      py::arg("config_json"), "runs one scenario from a JSON config and returns the summary as a dict");
}
